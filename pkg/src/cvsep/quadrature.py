"""Box integrals of state kernels for finite-width detector probes.

A box scalar product needs integrals of the kernel over an axis-aligned
box.  Three paths, chosen by kernel structure:

* Gaussian sums whose quadratic form couples every coordinate only to a
  single pivot (true for all built-in families) reduce analytically to a
  1-d integral whose integrand carries error-function factors; the
  remaining integral runs through adaptive quadrature.
* Chain-structured indicator states reduce to a 1-d piecewise-polynomial
  integral handled the same way.
* Everything else falls back to nested adaptive quadrature.

All adaptive work is scipy's Gauss-Kronrod panels behind a shared
evaluation budget: exceeding it raises NumericalFailureError instead of
returning a silently unconverged number.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.special import erf

from .errors import NumericalFailureError
from .states import IndicatorState, PureState, _indicator_chain

DEFAULT_REL_TOL = 1e-8
MAX_EVALS = 1_000_000


@dataclass
class EvalBudget:
    """Shared integrand-evaluation counter for one scalar product."""

    limit: int = MAX_EVALS
    used: int = field(default=0)

    def spend(self, n: int) -> None:
        self.used += n
        if self.used > self.limit:
            raise NumericalFailureError(
                f"quadrature exceeded its budget of {self.limit} integrand evaluations"
            )


def _quad_1d(f, a: float, b: float, rel_tol: float, budget: EvalBudget):
    calls = {"n": 0}

    def counted(x: float) -> float:
        calls["n"] += 1
        return f(x)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, err = quad(counted, a, b, epsabs=0.0, epsrel=rel_tol, limit=200)
    budget.spend(calls["n"])
    scale = max(abs(val), 1e-300)
    if err > 10.0 * rel_tol * scale and err > 1e-290:
        raise NumericalFailureError(
            f"1-d quadrature error estimate {err:.3e} above tolerance for value {val:.6e}"
        )
    return val


def _gauss_segment(m: float, beta: float, lo: float, hi: float) -> float:
    """Closed form for integral over [lo, hi] of exp(-m t^2 / 2 + beta t), m > 0."""
    mu = beta / m
    scale = math.sqrt(m / 2.0)
    pref = math.sqrt(math.pi / (2.0 * m)) * math.exp(0.5 * beta * mu)
    return pref * (erf((hi - mu) * scale) - erf((lo - mu) * scale))


def _find_pivot(M: np.ndarray) -> int | None:
    """Axis i such that zeroing row/column i leaves M diagonal, if any."""
    n = M.shape[0]
    for pivot in range(n):
        ok = True
        for a in range(n):
            for b in range(a + 1, n):
                if a != pivot and b != pivot and M[a, b] != 0.0:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return pivot
    return None


def box_kernel_integral(
    state: PureState,
    lows: np.ndarray,
    highs: np.ndarray,
    rel_tol: float = DEFAULT_REL_TOL,
    budget: EvalBudget | None = None,
) -> float:
    """Integral of the unnormalized kernel over the box prod_i [lows_i, highs_i]."""
    budget = budget if budget is not None else EvalBudget()
    lows = np.asarray(lows, dtype=float)
    highs = np.asarray(highs, dtype=float)
    if lows.shape != (state.n,) or highs.shape != (state.n,):
        raise ValueError("box bounds must match the state dimension")
    if np.any(highs <= lows):
        raise ValueError("box bounds must satisfy low < high per axis")
    if isinstance(state, IndicatorState):
        return _indicator_box_integral(state, lows, highs, rel_tol, budget)
    total = 0.0
    for atom in state.atoms():
        pivot = _find_pivot(atom.quad.M)
        plain = all(sum(a) == 0 for a in atom.poly)
        if pivot is not None and plain:
            const = atom.poly.get(tuple([0] * state.n), 0.0)
            total += atom.weight * const * _star_box_integral(
                atom.quad.M, atom.quad.b, atom.quad.c, pivot, lows, highs, rel_tol, budget
            )
        else:
            total += _nested_box_integral(
                lambda x, a=atom: float(a.eval(np.asarray(x, dtype=float))),
                lows,
                highs,
                rel_tol,
                budget,
            )
    return total


def _star_box_integral(
    M: np.ndarray,
    b: np.ndarray,
    c: float,
    pivot: int,
    lows: np.ndarray,
    highs: np.ndarray,
    rel_tol: float,
    budget: EvalBudget,
) -> float:
    """Analytic inner reduction for star-coupled quadratic forms.

    For fixed pivot value t every other coordinate integrates to an
    error-function segment, leaving one smooth 1-d integral over t.
    """
    n = M.shape[0]
    others = [i for i in range(n) if i != pivot]

    def integrand(t: float) -> float:
        log_val = -0.5 * M[pivot, pivot] * t * t + b[pivot] * t + c
        val = math.exp(log_val)
        for i in others:
            beta = b[i] - M[pivot, i] * t
            val *= _gauss_segment(M[i, i], beta, lows[i], highs[i])
        return val

    return _quad_1d(integrand, lows[pivot], highs[pivot], rel_tol, budget)


def _indicator_box_integral(
    state: IndicatorState,
    lows: np.ndarray,
    highs: np.ndarray,
    rel_tol: float,
    budget: EvalBudget,
) -> float:
    anchor, center, width, tied = _indicator_chain(state)
    lo = max(lows[anchor], center - width)
    hi = min(highs[anchor], center + width)
    if hi <= lo:
        return 0.0

    def integrand(t: float) -> float:
        val = 1.0
        for axis, (offset, w) in tied.items():
            a = max(lows[axis], t + offset - w)
            b = min(highs[axis], t + offset + w)
            val *= max(b - a, 0.0)
        return val

    # piecewise polynomial; split at the interval-overlap breakpoints so the
    # adaptive panels see smooth pieces
    breaks = {lo, hi}
    for axis, (offset, w) in tied.items():
        for edge in (lows[axis], highs[axis]):
            for sgn in (-1.0, 1.0):
                t = edge - offset + sgn * w
                if lo < t < hi:
                    breaks.add(t)
    pts = sorted(breaks)
    return sum(
        _quad_1d(integrand, a, b, rel_tol, budget) for a, b in zip(pts[:-1], pts[1:]) if b > a
    )


def _nested_box_integral(f, lows, highs, rel_tol, budget: EvalBudget) -> float:
    """Recursive 1-d reduction for generic smooth integrands (n <= 3 in practice)."""
    level_tol = rel_tol / max(len(lows), 1)

    def reduce_axis(coords: list[float], axis: int) -> float:
        if axis == len(lows):
            return f(coords)
        return _quad_1d(
            lambda t: reduce_axis(coords + [t], axis + 1),
            lows[axis],
            highs[axis],
            level_tol,
            budget,
        )

    return reduce_axis([], 0)
