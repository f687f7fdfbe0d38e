# Licensed under the BSD 3-Clause License.

from typing import Callable, List, Optional, Sequence

import numpy as np

from skelgnn.autodiff.tensor import Tensor, backward, sum_


def _scalar(out: Tensor) -> Tensor:
    return out if out.data.size == 1 else sum_(out)


def finite_diff_errors(
    f: Callable[[], Tensor],
    inputs: Sequence[Tensor],
    eps: float = 1e-5,
    max_coords: Optional[int] = None,
    seed: int = 0,
) -> List[float]:
    """Per-input max relative error between backward() and central
    differences (f(x + eps) - f(x - eps)) / (2 eps).

    f takes no argument and must be deterministic; non-scalar outputs are
    summed. max_coords limits the number of checked coordinates per input
    (drawn with a seeded generator). Entries masked out of a Parameter are
    skipped.
    """
    for t in inputs:
        t.zero_grad()
    backward(_scalar(f()))
    rng = np.random.default_rng(seed)
    errors = []
    for t in inputs:
        analytic = np.zeros_like(t.data) if t.grad is None else np.array(t.grad)
        mask = getattr(t, "mask", None)
        coords = np.flatnonzero(mask) if mask is not None else np.arange(t.data.size)
        if max_coords is not None and coords.size > max_coords:
            coords = rng.choice(coords, size=max_coords, replace=False)
        flat = t.data.reshape(-1)
        worst = 0.0
        for i in coords:
            orig = flat[i]
            flat[i] = orig + eps
            fp = float(_scalar(f()).data)
            flat[i] = orig - eps
            fm = float(_scalar(f()).data)
            flat[i] = orig
            numeric = (fp - fm) / (2.0 * eps)
            a = analytic.reshape(-1)[i]
            worst = max(worst, abs(a - numeric) / max(1e-8, abs(numeric)))
        errors.append(worst)
    return errors


def finite_diff_check(
    f: Callable[[], Tensor],
    inputs: Sequence[Tensor],
    eps: float = 1e-5,
    max_coords: Optional[int] = None,
    seed: int = 0,
) -> float:
    """Max relative gradient error over every checked coordinate of inputs."""
    errors = finite_diff_errors(f, inputs, eps, max_coords, seed)
    return max(errors) if errors else 0.0
