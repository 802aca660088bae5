"""Analytic state kernels: Gaussian sums, polynomial prefactors, box states, noise.

All states are represented by *unnormalized* real kernels Psi(x) together
with a cached squared norm <Psi|Psi>, so density-matrix elements of the
pure part are p * Psi(x) Psi(y) / pure_norm.  Classical noise enters as a
position-diagonal kernel whose matrix elements against sharp (delta
normalized) probes are read as probability *density* values g(x); this
density convention is what makes the closed-form results of the
non-Gaussian box family come out as printed, and it is flagged in every
serialized output (see `conventions`).

Families
--------
ghz_like          single correlated Gaussian, anchor coordinate x1 of width
                  sqrt(sigma), partners tied to x1 with width sqrt(epsilon)
w_like            sum of the six coordinate-shifted copies of the same
                  kernel (displacement `shift`); reduces to ghz_like up to
                  overall weight at shift = 0
indicator         uniform amplitude on |x1| < beta, |x1 - x2| < epsilon,
                  |x1 - x3| < epsilon (chain-structured box state)
annihilated_ghz   position-quadrature product x1*x2*x3 * ghz kernel; its
                  squared norm has the closed form
                  pi^(3/2)/8 * eps * sigma^(3/2) * (eps^2 + 6 eps sigma + 15 sigma^2),
                  which the moment engine reproduces exactly

`annihilate` applies the ladder operator a_i = x_i + d/dx_i symbolically
(natural units; the canonical 1/sqrt(2) rescaling would cancel in every
normalized criterion quantity and is omitted so that three applications to
the ghz kernel at sigma = epsilon = 1 reproduce the annihilated-family
norm above exactly).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from scipy.special import erf

from .errors import NonNormalizableError, UnsupportedStructureError
from .gaussian import (
    Poly,
    check_symmetric_psd,
    gaussian_integral,
    integrate_poly_gaussian,
    poly_add,
    poly_const,
    poly_degree,
    poly_diff,
    poly_eval,
    poly_mul,
    poly_mul_linear,
    poly_scale,
)

Point = np.ndarray

MAX_POLY_DEGREE = 6

W_SHIFT_PATTERN = (
    (-1, 0, 1),
    (0, 1, -1),
    (1, -1, 0),
    (1, 0, -1),
    (0, -1, 1),
    (-1, 1, 0),
)


def as_point(x: Sequence[float]) -> Point:
    p = np.asarray(x, dtype=float)
    if p.ndim != 1 or not np.all(np.isfinite(p)):
        raise ValueError("a point must be a finite 1-d coordinate vector")
    return p


# ---------------------------------------------------------------------------
# kernel building blocks


@dataclass(frozen=True)
class QuadraticExponent:
    """exp(-x'Mx/2 + b'x + c) with M symmetric positive semidefinite."""

    M: np.ndarray
    b: np.ndarray
    c: float = 0.0

    def __post_init__(self) -> None:
        M = np.asarray(self.M, dtype=float)
        b = np.asarray(self.b, dtype=float)
        check_symmetric_psd(M)
        if b.shape != (M.shape[0],):
            raise ValueError("linear coefficient dimension mismatch")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.M.shape[0]

    def shifted(self, s: np.ndarray) -> "QuadraticExponent":
        """Exponent of x -> base(x + s)."""
        s = np.asarray(s, dtype=float)
        Ms = self.M @ s
        return QuadraticExponent(
            self.M,
            self.b - Ms,
            self.c + float(self.b @ s) - 0.5 * float(s @ Ms),
        )

    def log_value(self, x: np.ndarray) -> np.ndarray | float:
        if x.ndim == 1:
            return -0.5 * float(x @ self.M @ x) + float(self.b @ x) + self.c
        quad = np.einsum("i...,ij,j...->...", x, self.M, x)
        lin = np.einsum("i,i...->...", self.b, x)
        return -0.5 * quad + lin + self.c


@dataclass(frozen=True)
class GaussianTerm:
    """weight * poly(x) * exp(quad); the engine's universal Gaussian atom."""

    weight: float
    poly: Poly
    quad: QuadraticExponent

    def eval(self, x: np.ndarray) -> np.ndarray | float:
        return self.weight * poly_eval(self.poly, x) * np.exp(self.quad.log_value(x))


@dataclass(frozen=True)
class GaussianSumState:
    """Psi(x) = sum_j w_j * base(x + s_j)."""

    base: QuadraticExponent
    terms: tuple[tuple[float, np.ndarray], ...]

    def __post_init__(self) -> None:
        if not self.terms:
            raise ValueError("at least one term required")
        norm_terms = tuple(
            (float(w), np.asarray(s, dtype=float)) for w, s in self.terms
        )
        if all(w == 0.0 for w, _ in norm_terms):
            raise ValueError("weights must not all vanish")
        if any(s.shape != (self.base.n,) for _, s in norm_terms):
            raise ValueError("shift dimension mismatch")
        object.__setattr__(self, "terms", norm_terms)

    @property
    def n(self) -> int:
        return self.base.n

    def atoms(self) -> list[GaussianTerm]:
        one = poly_const(self.n)
        return [GaussianTerm(w, one, self.base.shifted(s)) for w, s in self.terms]


@dataclass(frozen=True)
class PolyGaussianState:
    """poly(x) * Psi(x) with Psi a Gaussian sum; degree capped at 6.

    `term_polys`, when given, carries one polynomial per base term (needed
    after annihilating a sum whose terms have distinct linear parts); the
    shared-poly constructor covers every state family in this package.
    """

    poly: Poly
    base: GaussianSumState
    term_polys: tuple[Poly, ...] | None = None

    def __post_init__(self) -> None:
        polys = self.term_polys if self.term_polys is not None else (self.poly,)
        if any(poly_degree(p) > MAX_POLY_DEGREE for p in polys):
            raise UnsupportedStructureError(
                f"polynomial prefactor degree exceeds {MAX_POLY_DEGREE}"
            )
        # the zero polynomial (empty mapping) is allowed so that annihilating
        # a vacuum-matched Gaussian yields the zero kernel (norm 0)

    @property
    def n(self) -> int:
        return self.base.n

    def atoms(self) -> list[GaussianTerm]:
        if self.term_polys is None:
            return [
                GaussianTerm(w, self.poly, self.base.base.shifted(s))
                for w, s in self.base.terms
            ]
        return [
            GaussianTerm(w, p, self.base.base.shifted(s))
            for (w, s), p in zip(self.base.terms, self.term_polys)
        ]


@dataclass(frozen=True)
class IndicatorState:
    """Uniform amplitude over chain-structured box constraints.

    constraints: ('abs', axis, center, half_width) meaning |x_axis - center| < w,
    or ('pair', i, j, center, half_width) meaning |x_i - x_j - center| < w.
    """

    n: int
    constraints: tuple[tuple, ...]

    def __post_init__(self) -> None:
        for con in self.constraints:
            if con[0] not in ("abs", "pair"):
                raise ValueError(f"unknown constraint kind {con[0]!r}")
            if con[-1] <= 0.0:
                raise ValueError("half-widths must be strictly positive")

    def inside(self, x: np.ndarray) -> np.ndarray | bool:
        ok: np.ndarray | bool = True
        for con in self.constraints:
            if con[0] == "abs":
                _, i, d, w = con
                ok = ok & (np.abs(x[i] - d) < w)
            else:
                _, i, j, d, w = con
                ok = ok & (np.abs(x[i] - x[j] - d) < w)
        return ok


PureState = GaussianSumState | PolyGaussianState | IndicatorState


@dataclass(frozen=True)
class DiagonalNoise:
    """Position-diagonal noise kernel g(x) delta(x - x'), g a normalized density.

    kind 'gaussian': per-coordinate variance delta; kind 'box': uniform on
    [-delta, delta] per coordinate.
    """

    kind: Literal["gaussian", "box"]
    delta: float

    def __post_init__(self) -> None:
        if self.kind not in ("gaussian", "box"):
            raise ValueError("noise kind must be 'gaussian' or 'box'")
        if not self.delta > 0.0:
            raise ValueError("noise width must be strictly positive")

    def density(self, x: np.ndarray) -> np.ndarray | float:
        if self.kind == "gaussian":
            norm = (2.0 * math.pi * self.delta) ** (-0.5 * x.shape[0])
            return norm * np.exp(-np.sum(np.asarray(x) ** 2, axis=0) / (2.0 * self.delta))
        inside = np.all(np.abs(np.asarray(x)) < self.delta, axis=0)
        return inside / (2.0 * self.delta) ** x.shape[0]

    def box_weight(self, lo: float, hi: float) -> float:
        """Probability mass of one coordinate in [lo, hi]."""
        if self.kind == "gaussian":
            s = math.sqrt(2.0 * self.delta)
            return 0.5 * (erf(hi / s) - erf(lo / s))
        a = max(lo, -self.delta)
        b = min(hi, self.delta)
        return max(b - a, 0.0) / (2.0 * self.delta)


@dataclass(frozen=True)
class CvState:
    """rho = p |omega><omega| / pure_norm + (1 - p) * diagonal noise."""

    p: float
    pure: PureState
    noise: DiagonalNoise | None = None
    pure_norm: float = field(default=0.0)

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("mixing weight p must lie in [0, 1]")
        if self.p < 1.0 and self.noise is None:
            raise ValueError("a noise kernel is required when p < 1")
        norm = self.pure_norm if self.pure_norm > 0.0 else normalization_constant(self.pure)
        if not norm > 0.0:
            raise NonNormalizableError("pure kernel has vanishing norm")
        object.__setattr__(self, "pure_norm", float(norm))

    @property
    def n(self) -> int:
        return self.pure.n


# ---------------------------------------------------------------------------
# operations


def eval_wavefunction(state: PureState, x: Sequence[float]) -> float | np.ndarray:
    """Unnormalized kernel amplitude Psi(x); x of shape (n,) or (n, ...)."""
    xa = np.asarray(x, dtype=float)
    if xa.shape[0] != state.n:
        raise ValueError(f"point dimension {xa.shape[0]} != state dimension {state.n}")
    if isinstance(state, IndicatorState):
        val = state.inside(xa)
        return np.asarray(val, dtype=float) if isinstance(val, np.ndarray) else float(val)
    total: np.ndarray | float = 0.0
    for atom in state.atoms():
        total = total + atom.eval(xa)
    return total


def overlap(state_a: PureState, state_b: PureState) -> float:
    """<Psi_a|Psi_b> for unnormalized real kernels of the Gaussian family."""
    if isinstance(state_a, IndicatorState) or isinstance(state_b, IndicatorState):
        raise UnsupportedStructureError("overlap is closed-form for Gaussian kernels only")
    total = 0.0
    for ta in state_a.atoms():
        for tb in state_b.atoms():
            M = ta.quad.M + tb.quad.M
            b = ta.quad.b + tb.quad.b
            c = ta.quad.c + tb.quad.c
            prod = poly_mul(ta.poly, tb.poly)
            total += ta.weight * tb.weight * integrate_poly_gaussian(prod, M, b, c)
    return total


def normalization_constant(state: PureState) -> float:
    """<omega|omega> of the unnormalized kernel.

    Gaussian sums use pairwise overlap integrals (determinant + solve);
    polynomial prefactors go through the Gaussian moment recursion; the
    chain-structured indicator family has an exact product formula.
    """
    if isinstance(state, IndicatorState):
        return _indicator_norm(state)
    val = overlap(state, state)
    if not math.isfinite(val):
        raise NonNormalizableError("norm integral diverged")
    return val


def _indicator_chain(state: IndicatorState) -> tuple[int, float, float, dict[int, tuple[float, float]]]:
    """Decompose chain constraints: anchored axis and per-axis (center, width).

    Returns (anchor axis, anchor center, anchor half-width, tied axes map);
    raises for anything that is not a single anchor with each remaining
    axis tied to it exactly once.
    """
    abs_cons = [c for c in state.constraints if c[0] == "abs"]
    if len(abs_cons) != 1:
        raise UnsupportedStructureError("exactly one anchored axis is supported")
    _, anchor, center, width = abs_cons[0]
    tied: dict[int, tuple[float, float]] = {}
    for con in state.constraints:
        if con[0] != "pair":
            continue
        _, i, j, d, w = con
        if anchor not in (i, j):
            raise UnsupportedStructureError("only chains tied to the anchored axis are supported")
        other = j if i == anchor else i
        # |x_i - x_j - d| < w: seen from the non-anchor axis the offset flips sign
        offset = -d if i == anchor else d
        if other == anchor or other in tied:
            raise UnsupportedStructureError("each axis may be tied only once")
        tied[other] = (offset, w)
    if {anchor, *tied} != set(range(state.n)):
        raise UnsupportedStructureError("constraints must cover every axis exactly once")
    return anchor, center, width, tied


def _indicator_norm(state: IndicatorState) -> float:
    _, _, width, tied = _indicator_chain(state)
    norm = 2.0 * width
    for _, w in tied.values():
        norm *= 2.0 * w
    return norm


def annihilate(state: GaussianSumState | PolyGaussianState, mode: int) -> PolyGaussianState:
    """Apply the ladder operator a = x_mode + d/dx_mode symbolically.

    Each atom q(x) exp(-x'Mx/2 + b'x + c) becomes
    (dq/dx_mode + q * (x_mode + b_mode - (Mx)_mode)) exp(...).
    """
    if mode < 0 or mode >= state.n:
        raise ValueError("mode index out of range")
    if isinstance(state, GaussianSumState):
        base = state
        polys = [poly_const(state.n) for _ in state.terms]
    else:
        base = state.base
        polys = list(
            state.term_polys
            if state.term_polys is not None
            else (state.poly,) * len(base.terms)
        )
    new_polys: list[Poly] = []
    M = base.base.M
    for (w, s), q in zip(base.terms, polys):
        quad = base.base.shifted(s)
        # linear factor x_mode + b_mode - (Mx)_mode
        coeffs = -M[mode].copy()
        coeffs[mode] += 1.0
        lifted = poly_mul_linear(q, coeffs, float(quad.b[mode]))
        new_polys.append(poly_add(poly_diff(q, mode), lifted))
    shared = all(p == new_polys[0] for p in new_polys)
    return PolyGaussianState(
        poly=new_polys[0],
        base=base,
        term_polys=None if shared else tuple(new_polys),
    )


def ghz_like_exponent(sigma: float, epsilon: float) -> QuadraticExponent:
    """Anchor coordinate of width sqrt(sigma); partners tied with width sqrt(epsilon)."""
    if sigma <= 0.0 or epsilon <= 0.0:
        raise ValueError("sigma and epsilon must be strictly positive")
    M = np.array(
        [
            [1.0 / sigma + 2.0 / epsilon, -1.0 / epsilon, -1.0 / epsilon],
            [-1.0 / epsilon, 1.0 / epsilon, 0.0],
            [-1.0 / epsilon, 0.0, 1.0 / epsilon],
        ]
    )
    return QuadraticExponent(M, np.zeros(3), 0.0)


def build_family_state(
    family: str,
    *,
    sigma: float | None = None,
    epsilon: float | None = None,
    shift: float | None = None,
    beta: float | None = None,
) -> PureState:
    """Construct the pure kernel of one of the built-in tripartite families."""
    if family == "ghz_like":
        quad = ghz_like_exponent(_req(sigma, "sigma"), _req(epsilon, "epsilon"))
        return GaussianSumState(quad, ((1.0, np.zeros(3)),))
    if family == "w_like":
        quad = ghz_like_exponent(_req(sigma, "sigma"), _req(epsilon, "epsilon"))
        d = _req(shift, "shift", minimum=0.0)
        terms = tuple((1.0, d * np.array(pat, dtype=float)) for pat in W_SHIFT_PATTERN)
        return GaussianSumState(quad, terms)
    if family == "indicator":
        b = _req(beta, "beta")
        e = _req(epsilon, "epsilon")
        return IndicatorState(
            3,
            (
                ("abs", 0, 0.0, b),
                ("pair", 0, 1, 0.0, e),
                ("pair", 0, 2, 0.0, e),
            ),
        )
    if family == "annihilated_ghz":
        quad = ghz_like_exponent(_req(sigma, "sigma"), _req(epsilon, "epsilon"))
        base = GaussianSumState(quad, ((1.0, np.zeros(3)),))
        return PolyGaussianState(poly={(1, 1, 1): 1.0}, base=base)
    raise ValueError(f"unknown family {family!r}")


def _req(value: float | None, name: str, minimum: float = 0.0) -> float:
    if value is None:
        raise ValueError(f"parameter {name!r} is required for this family")
    if name == "shift":
        if value < minimum:
            raise ValueError(f"{name} must be >= {minimum}")
    elif value <= 0.0:
        raise ValueError(f"{name} must be strictly positive")
    return float(value)


def diag_value(state: CvState, x: Sequence[float]) -> float:
    """<x|rho|x> under the density convention for the diagonal noise."""
    xa = as_point(x)
    val = 0.0
    if state.p > 0.0:
        amp = float(eval_wavefunction(state.pure, xa))
        val += state.p * amp * amp / state.pure_norm
    if state.p < 1.0 and state.noise is not None:
        val += (1.0 - state.p) * float(state.noise.density(xa))
    return val


def offdiag_value(state: CvState, x: Sequence[float], y: Sequence[float]) -> float:
    """<x|rho|y> for x != y; the diagonal noise contributes nothing here."""
    xa, ya = as_point(x), as_point(y)
    if xa.shape != ya.shape:
        raise ValueError("points must share a dimension")
    if np.array_equal(xa, ya):
        raise ValueError("off-diagonal element requested on the diagonal; use diag_value")
    if state.p == 0.0:
        return 0.0
    amp_x = float(eval_wavefunction(state.pure, xa))
    amp_y = float(eval_wavefunction(state.pure, ya))
    return state.p * amp_x * amp_y / state.pure_norm


# ---------------------------------------------------------------------------
# printed closed forms kept as cross-check anchors


def family_norm_closed_form(family: str, **params: float) -> float:
    """Closed-form squared norms used as test anchors against the engine."""
    if family == "ghz_like":
        return math.pi**1.5 * params["epsilon"] * math.sqrt(params["sigma"])
    if family == "indicator":
        return 8.0 * params["epsilon"] ** 2 * params["beta"]
    if family == "annihilated_ghz":
        s, e = params["sigma"], params["epsilon"]
        return math.pi**1.5 / 8.0 * e * s**1.5 * (e * e + 6.0 * e * s + 15.0 * s * s)
    raise ValueError(f"no closed-form norm recorded for family {family!r}")


def w_like_norm_printed(sigma: float, epsilon: float, shift: float) -> float:
    """Literature closed form for the six-term family norm.

    Kept verbatim for comparison reports only: it disagrees with the
    engine's pairwise-overlap value (already visible at shift = 0, where
    the six coinciding terms must give 36 * pi^(3/2) * epsilon * sqrt(sigma)).
    The engine value is authoritative.
    """
    s, e, d = sigma, epsilon, shift
    return (
        2.0
        * math.pi**1.5
        * e
        * math.sqrt(s)
        * (
            math.exp(-2.0 * d * d / e)
            + 2.0 * math.exp(-d * d / (2.0 * e))
            + 2.0 * math.exp(-d * d * (e + 5.0 * s) / (e * s))
            + 4.0 * math.exp(-d * d * (e + 5.0 * s) / (4.0 * e * s))
            + 2.0 * math.exp(-d * d * (e + 9.0 * s) / (4.0 * e * s))
            + 2.0 * math.exp(-d * d * (e + 18.0 * s) / (4.0 * e * s))
            + 2.0 * math.sqrt(2.0) * math.exp((s - 2.0 * d * (d * e + 6.0 * s)) / (8.0 * e * s))
        )
    )


CONVENTIONS = {
    "density_convention": "sharp-probe matrix elements of diagonal noise are probability densities",
    "natural_units": "hbar = m = omega = 1; ladder operator a = x + d/dx (rescaling cancels in normalized criterion quantities)",
    "literal_partition_sum": "partition terms are summed literally over all k-partitions",
}
