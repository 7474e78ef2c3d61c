"""Central finite-difference oracle for checking tape gradients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .tensor import Parameter, Tape, Tensor, float64_evaluation, zero_grad


@dataclass
class GradCheckResult:
    ok: bool
    max_abs_err: float
    worst_param: str | None
    analytic: dict[str, np.ndarray]
    numeric: dict[str, np.ndarray]


def numeric_gradient(fn: Callable[[], Tensor], param: Parameter, step: float = 1e-3) -> np.ndarray:
    """Central differences of the scalar ``fn()`` with respect to ``param``.

    ``fn`` is evaluated without a tape and in float64, so the difference
    quotient is not dominated by float32 rounding; ``param`` is restored
    afterwards.
    """
    base = param.numpy()
    grad = np.zeros(base.shape, dtype=np.float64)
    flat = base.reshape(-1).astype(np.float64)
    try:
        with float64_evaluation():
            for i in range(flat.size):
                probe = flat.copy()
                probe[i] = flat[i] + step
                param.assign(probe.reshape(base.shape))
                up = fn().item()
                probe[i] = flat[i] - step
                param.assign(probe.reshape(base.shape))
                down = fn().item()
                grad.reshape(-1)[i] = (up - down) / (2 * step)
    finally:
        param.assign(base)
    return grad


def check_gradients(fn: Callable[[], Tensor], params: Sequence[Parameter], step: float = 1e-3,
                    rtol: float = 1e-2, atol: float = 1e-4) -> GradCheckResult:
    """Compare tape gradients of ``fn`` against central differences.

    An entry passes when ``|analytic - numeric| <= atol + rtol * |numeric|``.
    """
    zero_grad(params)
    with Tape() as tape:
        loss = fn()
        tape.backward(loss)
    analytic = {p.name: p.grad.astype(np.float64).copy() for p in params}
    numeric = {p.name: numeric_gradient(fn, p, step) for p in params}
    zero_grad(params)
    ok = True
    worst = 0.0
    worst_name = None
    for p in params:
        a, n = analytic[p.name], numeric[p.name]
        err = np.abs(a - n)
        if a.size and not np.all(err <= atol + rtol * np.abs(n)):
            ok = False
        if err.size and err.max() >= worst:
            worst = float(err.max())
            worst_name = p.name
    return GradCheckResult(ok, worst, worst_name, analytic, numeric)
