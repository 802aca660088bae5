"""Closed-form integrals and moments of polynomial-times-Gaussian kernels.

Everything the state engine needs reduces to two primitives:

* the normalization integral of exp(-x'Mx/2 + b'x + c) over R^n, and
* moments E[x^alpha] of the Gaussian measure that exponent defines.

Moments are generated by the standard recurrence
E[x_i x^beta] = mu_i E[x^beta] + sum_j Sigma_ij beta_j E[x^(beta - e_j)],
memoized per (M, b).  Polynomials are sparse maps from exponent tuples to
coefficients, which keeps products of two degree-6 prefactors (degree-12
monomials) exact and cheap.
"""

from __future__ import annotations

import math
from typing import Mapping

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import NonNormalizableError

Poly = Mapping[tuple[int, ...], float]

_EIG_FLOOR = -1e-12


def check_symmetric_psd(M: np.ndarray) -> None:
    """Validate a quadratic-form matrix: symmetric, eigenvalues >= -1e-12."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("quadratic form must be a square matrix")
    if not np.allclose(M, M.T, rtol=0.0, atol=0.0):
        raise ValueError("quadratic form must be exactly symmetric")
    if np.linalg.eigvalsh(M).min() < _EIG_FLOOR:
        raise ValueError("quadratic form must be positive semidefinite")


def gaussian_integral(M: np.ndarray, b: np.ndarray | None = None, c: float = 0.0) -> float:
    """Integral of exp(-x'Mx/2 + b'x + c) over R^n; requires M positive definite."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    try:
        chol = cho_factor(M, lower=True)
    except Exception as exc:
        raise NonNormalizableError("quadratic form is not positive definite") from exc
    log_det = 2.0 * np.log(np.diag(chol[0])).sum()
    exponent = c
    if b is not None:
        b = np.asarray(b, dtype=float)
        exponent += 0.5 * float(b @ cho_solve(chol, b))
    return math.exp(exponent + 0.5 * n * math.log(2.0 * math.pi) - 0.5 * log_det)


class MomentTable:
    """Memoized Gaussian moments for the measure exp(-x'Mx/2 + b'x)/Z."""

    def __init__(self, M: np.ndarray, b: np.ndarray | None = None):
        M = np.asarray(M, dtype=float)
        n = M.shape[0]
        b = np.zeros(n) if b is None else np.asarray(b, dtype=float)
        try:
            chol = cho_factor(M, lower=True)
        except Exception as exc:
            raise NonNormalizableError("quadratic form is not positive definite") from exc
        self.n = n
        self.mean = cho_solve(chol, b)
        self.cov = cho_solve(chol, np.eye(n))
        self._cache: dict[tuple[int, ...], float] = {tuple([0] * n): 1.0}

    def moment(self, alpha: tuple[int, ...]) -> float:
        """E[prod_i x_i^alpha_i]."""
        cached = self._cache.get(alpha)
        if cached is not None:
            return cached
        i = next(j for j, a in enumerate(alpha) if a > 0)
        beta = list(alpha)
        beta[i] -= 1
        beta_t = tuple(beta)
        val = self.mean[i] * self.moment(beta_t)
        for j, bj in enumerate(beta):
            if bj == 0:
                continue
            gamma = list(beta)
            gamma[j] -= 1
            val += self.cov[i, j] * bj * self.moment(tuple(gamma))
        self._cache[alpha] = val
        return val


def integrate_poly_gaussian(poly: Poly, M: np.ndarray, b: np.ndarray | None, c: float) -> float:
    """Integral of poly(x) * exp(-x'Mx/2 + b'x + c) over R^n."""
    z = gaussian_integral(M, b, c)
    table = MomentTable(M, b)
    total = 0.0
    for alpha, coeff in poly.items():
        if coeff == 0.0:
            continue
        total += coeff * table.moment(alpha)
    return z * total


# ---------------------------------------------------------------------------
# sparse polynomial helpers


def poly_const(n: int, value: float = 1.0) -> dict[tuple[int, ...], float]:
    return {tuple([0] * n): value}


def poly_add(p: Poly, q: Poly) -> dict[tuple[int, ...], float]:
    out = dict(p)
    for alpha, coeff in q.items():
        out[alpha] = out.get(alpha, 0.0) + coeff
    return {a: v for a, v in out.items() if v != 0.0}


def poly_scale(p: Poly, s: float) -> dict[tuple[int, ...], float]:
    return {a: v * s for a, v in p.items() if v * s != 0.0}


def poly_mul(p: Poly, q: Poly) -> dict[tuple[int, ...], float]:
    out: dict[tuple[int, ...], float] = {}
    for a, va in p.items():
        for bq, vb in q.items():
            key = tuple(x + y for x, y in zip(a, bq))
            out[key] = out.get(key, 0.0) + va * vb
    return {a: v for a, v in out.items() if v != 0.0}


def poly_mul_linear(p: Poly, coeffs: np.ndarray, const: float) -> dict[tuple[int, ...], float]:
    """Multiply p by the linear form (coeffs . x + const)."""
    n = len(coeffs)
    out: dict[tuple[int, ...], float] = {}
    for a, v in p.items():
        key = a
        if const != 0.0:
            out[key] = out.get(key, 0.0) + v * const
        for i in range(n):
            if coeffs[i] == 0.0:
                continue
            shifted = list(a)
            shifted[i] += 1
            ks = tuple(shifted)
            out[ks] = out.get(ks, 0.0) + v * coeffs[i]
    return {a: v for a, v in out.items() if v != 0.0}


def poly_diff(p: Poly, i: int) -> dict[tuple[int, ...], float]:
    out: dict[tuple[int, ...], float] = {}
    for a, v in p.items():
        if a[i] == 0:
            continue
        da = list(a)
        da[i] -= 1
        out[tuple(da)] = out.get(tuple(da), 0.0) + v * a[i]
    return out


def poly_degree(p: Poly) -> int:
    return max((sum(a) for a in p), default=0)


def poly_eval(p: Poly, x: np.ndarray) -> np.ndarray | float:
    """Evaluate at x of shape (n,) or (n, ...) batched along trailing axes."""
    x = np.asarray(x, dtype=float)
    batched = x.ndim > 1
    total = np.zeros(x.shape[1:]) if batched else 0.0
    for alpha, coeff in p.items():
        term = coeff
        for i, a in enumerate(alpha):
            if a:
                term = term * x[i] ** a
        total = total + term
    return total
