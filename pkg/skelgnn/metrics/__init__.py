from skelgnn.metrics.pose_metrics import (
    DEFAULT_AUC_THRESHOLDS,
    root_relative,
    joint_errors,
    mpjpe,
    procrustes_transform,
    procrustes_align,
    pa_mpjpe,
    per_sample_mpjpe,
    per_sample_pa_mpjpe,
    pck,
    auc,
)
from skelgnn.metrics.hard_poses import (
    HardPoseReport,
    error_histogram,
    hardest_count,
    hardest_indices,
    hardest_p_mean,
    hard_pose_report,
    hard_pose_comparison,
    histogram_table,
)
from skelgnn.metrics.report import EvalReport
