"""Central finite-difference check of analytic gradients."""

from __future__ import annotations

from typing import Callable

import numpy as np

Params = dict[str, np.ndarray]


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> np.ndarray:
    """``|a - n| / max(|a|, |n|, floor)``; the floor keeps near-zero entries sane."""
    return np.abs(analytic - numeric) / np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)


def numeric_gradient(loss: Callable[[Params], float], params: Params, step: float = 1e-5) -> Params:
    grads = {}
    for name, value in params.items():
        g = np.zeros_like(value, dtype=np.float64)
        flat = value.reshape(-1)
        out = g.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + step
            hi = loss(params)
            flat[k] = orig - step
            lo = loss(params)
            flat[k] = orig
            out[k] = (hi - lo) / (2 * step)
        grads[name] = g
    return grads


def finite_diff_gradcheck(
    forward: Callable[[Params], np.ndarray],
    backward: Callable[[Params, np.ndarray], Params],
    params: Params,
    seed: int = 0,
    step: float = 1e-5,
    floor: float = 1e-6,
) -> float:
    """Worst relative error between ``backward`` and central differences.

    The scalar being differentiated is ``probe . forward(params)`` with a
    seeded standard-normal probe. ``backward(params, probe)`` must return the
    analytic gradient of that scalar for every entry of ``params``.
    Parameters are perturbed in place and restored.
    """
    for v in params.values():
        if v.dtype != np.float64:
            raise TypeError("gradient checks require float64 parameters")
    probe = np.random.default_rng(seed).standard_normal(np.shape(forward(params)))
    analytic = backward(params, probe)
    numeric = numeric_gradient(lambda p: float(np.sum(probe * forward(p))), params, step)
    worst = 0.0
    for name in params:
        err = relative_error(np.asarray(analytic[name]), numeric[name], floor)
        if err.size:
            worst = max(worst, float(err.max()))
    return worst
