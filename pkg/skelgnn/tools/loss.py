# Licensed under the BSD 3-Clause License.

from skelgnn.autodiff import Tensor, abs_, as_tensor, mean, sub
from skelgnn.errors import ShapeMismatch


def l1_loss(pred, gt) -> Tensor:
    """Mean absolute error over every coordinate."""
    pred, gt = as_tensor(pred), as_tensor(gt)
    if pred.shape != gt.shape:
        raise ShapeMismatch(f"l1_loss: prediction {pred.shape}, target {gt.shape}")
    return mean(abs_(sub(pred, gt)))
