"""Finite-detector protocol: effective qubits, observable tables, uncertainties.

With per-subsystem detector states |a_i> and |b_i> (disjoint boxes of
width xi), each subsystem carries an effective two-dimensional subspace
with its own Pauli operators.  Compressing the state onto that subspace
gives a 2^n x 2^n matrix whose entries are box scalar products; for
n = 3, k = 2 the inequality has an explicit decomposition into the 64
three-letter Pauli expectation values, evaluated here verbatim.

Measurement uncertainty propagates through the geometric-mean partition
terms by the Gaussian law: with absolute uncertainty o on the off-diagonal
term and a shared relative uncertainty zeta on every diagonal expectation
value, each of the 2k factors of a partition term T contributes
(T * zeta / 2k)^2, so

    Xi_exact^2 = o^2 + (zeta^2 / 2k) * sum_alpha T_alpha^2
    Xi_bound   = sqrt(o^2 + zeta^2 * gamma / (8 k^3)),   gamma = #partitions,

the bound saturating when all factors are equal at probability-normalized
scalar products (a geometric mean is maximal when its factors coincide).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .criterion import BoxProbe, BoxScalarEngine, CriterionResult, scale_result
from .errors import InconsistentTableError
from .partitions import partition_count
from .quadrature import DEFAULT_REL_TOL
from .states import CvState

PAULI = {
    "1": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

LABELS3 = tuple("".join(p) for p in itertools.product("1xyz", repeat=3))


@dataclass(frozen=True)
class EffectiveQubitState:
    """State compressed onto the detector subspaces, as a real symmetric matrix.

    Basis order: binary strings over {a, b} per subsystem, a = 0 ('aaa',
    'aab', ..., 'bbb' for n = 3).  The trace is at most one because the
    compression projects onto a proper subspace.
    """

    matrix: np.ndarray
    trace_in_subspace: float

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("effective state must be square")
        if not np.allclose(m, m.T, atol=1e-12, rtol=0.0):
            raise ValueError("effective state must be symmetric")
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise ValueError("effective state must be positive semidefinite")
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return int(round(math.log2(self.matrix.shape[0])))


@dataclass(frozen=True)
class ObservableExpansion:
    """Three-letter Pauli expectation table and the decomposed inequality value."""

    table: dict[str, float]
    decomposed_lhs: float
    trace_in_subspace: float

    def to_json_dict(self) -> dict:
        return {
            "labels": {label: self.table[label] for label in LABELS3},
            "decomposed_lhs": self.decomposed_lhs,
            "convention": "sigma_i ⊗ sigma_j ⊗ sigma_k",
        }


def box_scalar_products(
    state: CvState, probe: BoxProbe, rel_tol: float = DEFAULT_REL_TOL
) -> dict[str, float]:
    """All scalar products the inequality needs for one box probe.

    Keys: 'offdiag' for <phi1|rho|phi2>, and 'diag:<word>' for the diagonal
    elements at every mixed detector word (letters a/b selecting the phi1 or
    phi2 box per subsystem).
    """
    engine = BoxScalarEngine(state, probe, rel_tol=rel_tol)
    out = {"offdiag": engine.offdiag()}
    for word in itertools.product("ab", repeat=state.n):
        centers = np.array(
            [probe.phi1[i] if c == "a" else probe.phi2[i] for i, c in enumerate(word)]
        )
        out["diag:" + "".join(word)] = engine.diag(centers)
    return out


def effective_qubit_state(
    state: CvState, probe: BoxProbe, rel_tol: float = DEFAULT_REL_TOL
) -> EffectiveQubitState:
    """Compress rho onto the tensor product of detector subspaces.

    Entry (v, w) is <e_v|rho|e_w> with e_v the product of boxes selected by
    the letters of v.  The pure part factorizes into box amplitudes; the
    diagonal noise only hits v = w because the two boxes are disjoint in
    every subsystem.
    """
    engine = BoxScalarEngine(state, probe, rel_tol=rel_tol)
    n = state.n
    dim = 2**n
    words = list(itertools.product((0, 1), repeat=n))
    centers = [
        np.array([probe.phi1[i] if bit == 0 else probe.phi2[i] for i, bit in enumerate(w)])
        for w in words
    ]
    amps = np.array([engine.pure_amplitude(c) for c in centers])
    matrix = state.p * np.outer(amps, amps) / state.pure_norm
    if state.p < 1.0 and state.noise is not None:
        half = 0.5 * probe.xi
        for idx, c in enumerate(centers):
            mass = 1.0
            for coord in c:
                mass *= state.noise.box_weight(coord - half, coord + half) / probe.xi
            matrix[idx, idx] += (1.0 - state.p) * mass
    return EffectiveQubitState(matrix=matrix, trace_in_subspace=float(np.trace(matrix)))


def pauli_expectations(eff: EffectiveQubitState) -> ObservableExpansion:
    """All 64 three-letter Pauli expectation values of the compressed state."""
    if eff.n != 3:
        raise ValueError("the observable table is defined for three subsystems")
    rho = eff.matrix.astype(complex)
    table: dict[str, float] = {}
    for label in LABELS3:
        op = np.kron(np.kron(PAULI[label[0]], PAULI[label[1]]), PAULI[label[2]])
        val = np.trace(rho @ op)
        if abs(val.imag) > 1e-10:
            raise InconsistentTableError(f"expectation {label} is not real: {val}")
        table[label] = float(val.real)
    return ObservableExpansion(
        table=table,
        decomposed_lhs=decomposed_lhs_n3k2(table),
        trace_in_subspace=eff.trace_in_subspace,
    )


_Z_BRACKETS = (
    # sign patterns of (zz1, z1z, 1zz, 11z, 1z1, z11, zzz) after the leading 111
    ((+1, -1, -1, +1, -1, -1, +1), (+1, -1, -1, -1, +1, +1, -1)),
    ((-1, +1, -1, +1, -1, +1, -1), (-1, +1, -1, -1, +1, -1, +1)),
    ((-1, -1, +1, +1, +1, -1, -1), (-1, -1, +1, -1, -1, +1, +1)),
)
_Z_LABELS = ("zz1", "z1z", "1zz", "11z", "1z1", "z11", "zzz")


def decomposed_lhs_n3k2(table: dict[str, float]) -> float:
    """The explicit three-party, k = 2 inequality evaluated from the table.

    (1/8)|xxx - yyx - yxy - xyy + i(yyy - xxy - xyx - yxx)| minus the three
    square-root products of z-diagonal brackets; each bracket is eight times
    a diagonal matrix element, so radicands below -1e-10 mean the table is
    inconsistent (tiny negatives are clamped to zero).
    """
    missing = [label for label in LABELS3 if label not in table]
    if missing:
        raise ValueError(f"observable table is missing {len(missing)} labels, e.g. {missing[0]}")
    head = complex(
        table["xxx"] - table["yyx"] - table["yxy"] - table["xyy"],
        table["yyy"] - table["xxy"] - table["xyx"] - table["yxx"],
    )
    total = abs(head) / 8.0
    for signs_a, signs_b in _Z_BRACKETS:
        vals = []
        for signs in (signs_a, signs_b):
            bracket = table["111"] + sum(s * table[l] for s, l in zip(signs, _Z_LABELS))
            if bracket < -1e-10:
                raise InconsistentTableError(
                    f"negative diagonal bracket {bracket:.3e}; table is not a valid state"
                )
            vals.append(max(bracket, 0.0))
        total -= math.sqrt(vals[0] * vals[1]) / 8.0
    return total


@dataclass(frozen=True)
class UncertaintyBudget:
    """Propagated measurement uncertainty of the inequality's left-hand side."""

    o: float
    zeta: float
    xi_exact: float
    xi_bound: float


def propagate_uncertainty(
    result: CriterionResult, o: float, zeta: float, n: int, k: int
) -> UncertaintyBudget:
    """Gaussian error propagation through the evaluated partition terms."""
    if o < 0.0 or zeta < 0.0:
        raise ValueError("uncertainties must be non-negative")
    if k != result.k:
        raise ValueError("k disagrees with the evaluated result")
    sum_sq = sum(t * t for _, t in result.partition_terms)
    xi_exact = math.sqrt(o * o + zeta * zeta * sum_sq / (2.0 * k))
    gamma = partition_count(n, k)
    xi_bound = math.sqrt(o * o + zeta * zeta * gamma / (8.0 * k**3))
    return UncertaintyBudget(o=o, zeta=zeta, xi_exact=xi_exact, xi_bound=xi_bound)


def efficiency_scale(result: CriterionResult, tau: float) -> CriterionResult:
    """Imperfect detectors multiply every scalar product by tau in [0, 1].

    The left-hand side is degree one in the scalar products, so the
    violation magnitude scales linearly and its sign never flips.
    """
    if not 0.0 <= tau <= 1.0:
        raise ValueError("detector efficiency tau must lie in [0, 1]")
    return scale_result(result, tau)
