from skelgnn.tools.timing import timing, timing_reset
from skelgnn.tools.logging import train_log, train_log_reset, write_run_config, read_log
from skelgnn.tools.config import (
    TrainConfig,
    DataConfig,
    MetricsConfig,
    RunConfig,
    apply_overrides,
    load_run_config,
)
from skelgnn.tools.optim import OptimState, adam_step, lr_at
from skelgnn.tools.loss import l1_loss
from skelgnn.tools.augment import flip_arrays, flip_inputs, flip_sample
from skelgnn.tools.eval import model_inputs, predict, sample_errors, evaluate
from skelgnn.tools.learn import fit
from skelgnn.tools.ablation import (
    STUDIES,
    AblationRow,
    study_variants,
    run_ablation,
    format_ablation_table,
)
from skelgnn.tools.gradient_suite import gradient_suite
