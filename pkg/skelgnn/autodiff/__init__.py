from skelgnn.autodiff.tensor import (
    Tensor,
    Parameter,
    ComputationTape,
    TapeEntry,
    as_tensor,
    backward,
    add,
    sub,
    mul,
    scale,
    neg,
    power,
    tanh,
    leaky_relu,
    abs_,
    matmul,
    concat,
    sum_,
    mean,
    transpose,
    reshape,
    take,
)
from skelgnn.autodiff.nn_ops import (
    BNState,
    batch_norm,
    dropout,
    conv1d_temporal,
    BN_EPS,
    BN_MOMENTUM,
)
from skelgnn.autodiff.gradcheck import finite_diff_check, finite_diff_errors
