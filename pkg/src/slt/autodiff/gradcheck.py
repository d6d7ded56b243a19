"""Central finite-difference verification of analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import ContractError
from ..rng import SplitMix64
from .tensor import Tensor, backward


@dataclass
class GradcheckReport:
    max_rel_err: float
    pass_: bool
    n_checked: int
    worst_index: tuple[int, ...] | None = None
    analytic: float = 0.0
    numeric: float = 0.0

    @property
    def passed(self) -> bool:
        return self.pass_


def _scalar(out: Tensor) -> float:
    if out.data.size != 1:
        raise ContractError(f"gradcheck needs a scalar-valued function, got shape {out.shape}")
    return float(out.data.reshape(-1)[0])


def gradcheck(f: Callable[[], Tensor], x: Tensor, h: float = 1e-3, tol: float = 1e-3,
              n_samples: int | None = None, rng: SplitMix64 | None = None) -> GradcheckReport:
    """Compare d f / d x from backward against (f(x+h) - f(x-h)) / 2h.

    ``f`` is a zero-argument closure that reads ``x`` (so it can also close
    over other parameters). Relative error per element is
    ``|a - n| / max(1, |a|, |n|)``. With ``n_samples`` only that many
    randomly chosen elements are perturbed.
    """
    saved_grad = x.grad
    x.grad = None
    out = f()
    _scalar(out)
    backward(out)
    analytic = np.zeros_like(x.data) if x.grad is None else x.grad.copy()
    x.grad = saved_grad

    if not x.data.flags.c_contiguous:
        x.data = np.ascontiguousarray(x.data)
    flat = x.data.reshape(-1)
    if n_samples is None or n_samples >= flat.size:
        indices = np.arange(flat.size)
    else:
        rng = rng or SplitMix64(0)
        indices = np.sort(rng.permutation(flat.size)[:n_samples])

    worst, worst_idx, worst_a, worst_n = 0.0, None, 0.0, 0.0
    for i in indices:
        orig = flat[i]
        flat[i] = orig + h
        up = float(flat[i])
        fp = _scalar(f())
        flat[i] = orig - h
        down = float(flat[i])
        fm = _scalar(f())
        flat[i] = orig
        # divide by the step actually stored, which differs from 2h in f32
        num = (fp - fm) / (up - down)
        a = float(analytic.reshape(-1)[i])
        err = abs(a - num) / max(1.0, abs(a), abs(num))
        if err > worst or worst_idx is None:
            worst = err
            worst_idx = tuple(int(j) for j in np.unravel_index(i, x.shape))
            worst_a, worst_n = a, num
    return GradcheckReport(worst, worst < tol, len(indices), worst_idx, worst_a, worst_n)
