# Licensed under the BSD 3-Clause License.

"""Adam on numpy parameters, through optax.

Parameters stay numpy arrays owned by the model; every step hands optax a
dict of 64-bit jax arrays and writes the updated values back. The learning
rate is an injected hyperparameter so the per-epoch schedule can change it
without rebuilding the optimizer state.

Building an OptimState switches jax to 64-bit mode for the whole process;
importing the module leaves the jax configuration alone.
"""

from typing import Dict, Optional, Sequence

import jax
import jax.numpy as jnp
import numpy as np
import optax

from skelgnn.autodiff import Parameter
from skelgnn.errors import ShapeMismatch


def lr_at(epoch: int, cfg) -> float:
    """lr0 * lr_decay ** epoch, the decay applied once per epoch."""
    return cfg.lr0 * cfg.lr_decay**epoch


class OptimState:
    def __init__(
        self,
        params: Sequence[Parameter],
        lr: float = 0.001,
        b1: float = 0.9,
        b2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.names = [p.name for p in params]
        assert len(set(self.names)) == len(self.names), "parameter names must differ"
        self.shapes = {p.name: p.shape for p in params}
        self.b1, self.b2, self.eps = b1, b2, eps
        jax.config.update("jax_enable_x64", True)
        self.tx = optax.inject_hyperparams(optax.adam)(
            learning_rate=lr, b1=b1, b2=b2, eps=eps
        )
        self.opt_state = self.tx.init(
            {p.name: jnp.asarray(p.data, dtype=jnp.float64) for p in params}
        )
        self.step_count = 0

    def _adam_state(self):
        for s in self.opt_state.inner_state:
            if hasattr(s, "mu"):
                return s
        raise AssertionError("optax adam state not found")

    @property
    def first_moments(self) -> Dict[str, np.ndarray]:
        return {k: np.asarray(v) for k, v in self._adam_state().mu.items()}

    @property
    def second_moments(self) -> Dict[str, np.ndarray]:
        return {k: np.asarray(v) for k, v in self._adam_state().nu.items()}

    @property
    def lr(self) -> float:
        return float(self.opt_state.hyperparams["learning_rate"])


def adam_step(
    params: Sequence[Parameter],
    grads: Optional[Sequence[Optional[np.ndarray]]],
    state: OptimState,
    lr_t: float,
) -> OptimState:
    """One bias-corrected Adam update, in place. grads defaults to each
    parameter's .grad; a missing gradient counts as zero."""
    if grads is None:
        grads = [p.grad for p in params]
    if [p.name for p in params] != state.names:
        raise ShapeMismatch("parameters differ from the optimizer's")
    g_tree, p_tree = {}, {}
    for p, g in zip(params, grads):
        g = np.zeros_like(p.data) if g is None else np.asarray(g, dtype=np.float64)
        if g.shape != p.shape or p.shape != state.shapes[p.name]:
            raise ShapeMismatch(
                f"{p.name}: gradient {g.shape}, parameter {p.shape}, "
                f"optimizer {state.shapes[p.name]}"
            )
        g_tree[p.name] = jnp.asarray(g)
        p_tree[p.name] = jnp.asarray(p.data)
    state.opt_state.hyperparams["learning_rate"] = jnp.asarray(
        lr_t, dtype=jnp.float64
    )
    updates, state.opt_state = state.tx.update(g_tree, state.opt_state, p_tree)
    new_params = optax.apply_updates(p_tree, updates)
    for p in params:
        p.data = np.array(new_params[p.name], dtype=np.float64)
    state.step_count += 1
    return state
