from skelgnn.data.samples import (
    DATASET_FORMAT,
    DATASET_VERSION,
    PoseSample,
    normalize_2d,
    denormalize_2d,
    parse_record,
    load_dataset,
    save_dataset,
    stack_samples,
    group_sequences,
    make_windows,
)
from skelgnn.data.synthetic import (
    H36M_BONE_LENGTHS,
    SyntheticRigSpec,
    forward_kinematics,
    weak_perspective,
    synthesize_dataset,
    mean_bone_length,
)
