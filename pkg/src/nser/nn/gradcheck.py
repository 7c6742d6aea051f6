"""Central finite-difference gradient verification."""

from __future__ import annotations

from typing import Callable

import numpy as np


class GradientCheckFailure(AssertionError):
    def __init__(self, max_rel_err: float, tolerance: float, worst: str):
        super().__init__(
            f"gradient check failed: max relative error {max_rel_err:.3e} "
            f"> tolerance {tolerance:.1e} at {worst}"
        )
        self.max_rel_err = max_rel_err


def grad_check(
    fn: Callable[[dict[str, np.ndarray]], tuple[float, dict[str, np.ndarray]]],
    params: dict[str, np.ndarray],
    tolerance: float | None = None,
    h: float = 1e-5,
    sample: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Compare fn's analytic gradients against central differences.

    fn maps the live parameter dict to (scalar loss, grads keyed like params)
    and must be re-evaluable (pure given params). Each parameter tensor is
    probed at all coordinates, or at `sample` rng-chosen coordinates when the
    tensor is larger. Relative error per coordinate is
    |analytic - numeric| / max(1, |analytic| + |numeric|); the max over all
    probed coordinates is returned, and raised as GradientCheckFailure if a
    tolerance is given and exceeded.
    """
    _, analytic = fn(params)
    max_rel = 0.0
    worst = ""
    for name in sorted(params):
        p = params[name]
        flat = p.reshape(-1)
        n = flat.shape[0]
        if sample is not None and n > sample:
            if rng is None:
                rng = np.random.default_rng(0)
            coords = rng.choice(n, size=sample, replace=False)
        else:
            coords = np.arange(n)
        a_flat = analytic[name].reshape(-1)
        for i in coords:
            orig = flat[i]
            flat[i] = orig + h
            loss_plus, _ = fn(params)
            flat[i] = orig - h
            loss_minus, _ = fn(params)
            flat[i] = orig
            numeric = (loss_plus - loss_minus) / (2.0 * h)
            a = a_flat[i]
            rel = abs(a - numeric) / max(1.0, abs(a) + abs(numeric))
            if rel > max_rel:
                max_rel = rel
                worst = f"{name}[{i}] (analytic {a:.6e}, numeric {numeric:.6e})"
    if tolerance is not None and max_rel > tolerance:
        raise GradientCheckFailure(max_rel, tolerance, worst)
    return max_rel
