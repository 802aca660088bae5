"""The k-separability inequality for sharp and finite-width probes.

For a two-point probe (phi1, phi2) and every k-partition {alpha} of the n
subsystems, a k-separable state must satisfy

    |<phi1|rho|phi2>|  <=  sum_{alpha} prod_{i=1..k} [ <chi_i|rho|chi_i>
                                                       <chi_i'|rho|chi_i'> ]^(1/2k)

where (chi_i, chi_i') swap the coordinates of block alpha_i between the two
probe points.  A strictly positive left-hand side therefore witnesses that
the state is NOT k-separable; k = 2 violation flags genuine multipartite
entanglement.  Both sides are degree one in the state kernel, so verdicts
are invariant under overall rescaling.

Sharp probes evaluate the kernel pointwise (density convention for the
diagonal noise).  Box probes of width xi integrate the kernel against
normalized box functions (amplitude xi^(-1/2) per subsystem); the two
normalization conventions are never mixed within one result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Literal, Sequence

import numpy as np

from .errors import InvalidProbeError
from .partitions import SetPartition, block_swap, enumerate_partitions
from .quadrature import DEFAULT_REL_TOL, EvalBudget, box_kernel_integral
from .states import CvState, as_point, diag_value, offdiag_value

DECISION_TOL = 1e-12

VERDICT_VIOLATED = "violated"
VERDICT_NOT_VIOLATED = "not-violated"


@dataclass(frozen=True)
class SharpProbe:
    """Position-eigenstate probe pair; coordinates must differ per subsystem."""

    phi1: np.ndarray
    phi2: np.ndarray

    def __post_init__(self) -> None:
        p1, p2 = as_point(self.phi1), as_point(self.phi2)
        object.__setattr__(self, "phi1", p1)
        object.__setattr__(self, "phi2", p2)
        if p1.shape != p2.shape:
            raise InvalidProbeError("probe points must share a dimension")
        if np.any(p1 == p2):
            bad = int(np.nonzero(p1 == p2)[0][0])
            raise InvalidProbeError(
                f"probe points coincide in subsystem {bad}; per-subsystem orthogonality requires distinct coordinates"
            )

    @property
    def n(self) -> int:
        return self.phi1.size

    kind: Literal["sharp"] = "sharp"


@dataclass(frozen=True)
class BoxProbe:
    """Finite-detector probe: per-subsystem boxes of width xi around the centers."""

    phi1: np.ndarray
    phi2: np.ndarray
    xi: float

    def __post_init__(self) -> None:
        p1, p2 = as_point(self.phi1), as_point(self.phi2)
        object.__setattr__(self, "phi1", p1)
        object.__setattr__(self, "phi2", p2)
        if p1.shape != p2.shape:
            raise InvalidProbeError("probe points must share a dimension")
        if not self.xi > 0.0:
            raise InvalidProbeError("box width xi must be strictly positive")
        gap = np.abs(p1 - p2)
        if np.any(gap < self.xi * (1.0 - 1e-12)):
            bad = int(np.nonzero(gap < self.xi)[0][0])
            raise InvalidProbeError(
                f"boxes overlap in subsystem {bad}: center distance {gap[bad]:.6g} < width {self.xi:.6g}"
            )

    @property
    def n(self) -> int:
        return self.phi1.size

    kind: Literal["box"] = "box"


Probe = SharpProbe | BoxProbe


@dataclass(frozen=True)
class CriterionResult:
    """Evaluated left-hand side of the inequality for one probe and one k."""

    offdiag_term: float
    partition_terms: tuple[tuple[SetPartition, float], ...]
    lhs: float
    k: int
    verdict: str
    probe_kind: str = "sharp"
    decision_tol: float = DECISION_TOL

    @property
    def violated(self) -> bool:
        return self.verdict == VERDICT_VIOLATED


def _verdict(lhs: float, tol: float) -> str:
    return VERDICT_VIOLATED if lhs > tol else VERDICT_NOT_VIOLATED


def _partition_term(diags: list[float], k: int) -> float:
    """prod diags^(1/2k) with log-domain fallback against underflow."""
    if any(d == 0.0 for d in diags):
        return 0.0
    if any(d < 0.0 for d in diags):
        raise ValueError("diagonal kernel values must be non-negative")
    power = 1.0 / (2.0 * k)
    if min(diags) < 1e-100:
        return math.exp(sum(math.log(d) for d in diags) * power)
    out = 1.0
    for d in diags:
        out *= d**power
    return out


def evaluate_terms(
    offdiag: float,
    diag_fn: Callable[[np.ndarray], float],
    probe_points: tuple[np.ndarray, np.ndarray],
    n: int,
    k: int,
    decision_tol: float = DECISION_TOL,
    probe_kind: str = "sharp",
) -> CriterionResult:
    """Assemble the inequality from an off-diagonal value and a diagonal oracle.

    Shared by the sharp and box paths (and by mixture evaluation in the
    tests): for each partition, each block contributes the two swapped
    points' diagonal values to the geometric mean.
    """
    phi1, phi2 = probe_points
    partitions = enumerate_partitions(n, k)
    diag_cache: dict[tuple[float, ...], float] = {}

    def diag(point: np.ndarray) -> float:
        key = tuple(point)
        if key not in diag_cache:
            diag_cache[key] = diag_fn(point)
        return diag_cache[key]

    terms: list[tuple[SetPartition, float]] = []
    for part in partitions:
        diags: list[float] = []
        for blk in part.blocks:
            chi, chi_p = block_swap(phi1, phi2, blk)
            diags.append(diag(chi))
            diags.append(diag(chi_p))
        terms.append((part, _partition_term(diags, k)))
    offdiag_term = abs(offdiag)
    lhs = offdiag_term - sum(t for _, t in terms)
    return CriterionResult(
        offdiag_term=offdiag_term,
        partition_terms=tuple(terms),
        lhs=lhs,
        k=k,
        verdict=_verdict(lhs, decision_tol),
        probe_kind=probe_kind,
        decision_tol=decision_tol,
    )


def criterion_lhs(state: CvState, probe: SharpProbe, k: int) -> CriterionResult:
    """Exact sharp-probe evaluation of the inequality for one k."""
    if not isinstance(probe, SharpProbe):
        raise InvalidProbeError("criterion_lhs expects a sharp probe; use criterion_lhs_box")
    if probe.n != state.n:
        raise InvalidProbeError("probe dimension does not match the state")
    off = offdiag_value(state, probe.phi1, probe.phi2)
    return evaluate_terms(
        off,
        lambda x: diag_value(state, x),
        (probe.phi1, probe.phi2),
        state.n,
        k,
    )


class BoxScalarEngine:
    """Box scalar products of one state against one box probe, cached per center tuple.

    Pure part: <e|omega> = xi^(-n/2) * integral of the kernel over the box
    around the centers; noise: product of per-coordinate box masses scaled
    by xi^(-1) (only on the diagonal, boxes from the two probe points being
    disjoint).
    """

    def __init__(
        self,
        state: CvState,
        probe: BoxProbe,
        rel_tol: float = DEFAULT_REL_TOL,
        budget_per_product: int | None = None,
    ):
        if probe.n != state.n:
            raise InvalidProbeError("probe dimension does not match the state")
        if not 1e-12 <= rel_tol <= 1e-3:
            raise ValueError("relative tolerance must lie in [1e-12, 1e-3]")
        self.state = state
        self.probe = probe
        self.rel_tol = rel_tol
        self.budget_per_product = budget_per_product
        self._amp_cache: dict[tuple[float, ...], float] = {}

    def _budget(self) -> EvalBudget:
        if self.budget_per_product is None:
            return EvalBudget()
        return EvalBudget(limit=self.budget_per_product)

    def pure_amplitude(self, centers: np.ndarray) -> float:
        """xi^(-n/2) * integral of the kernel over the centered box."""
        key = tuple(centers)
        if key not in self._amp_cache:
            half = 0.5 * self.probe.xi
            raw = box_kernel_integral(
                self.state.pure,
                centers - half,
                centers + half,
                rel_tol=self.rel_tol,
                budget=self._budget(),
            )
            self._amp_cache[key] = raw * self.probe.xi ** (-0.5 * self.state.n)
        return self._amp_cache[key]

    def offdiag(self) -> float:
        if self.state.p == 0.0:
            return 0.0
        a1 = self.pure_amplitude(self.probe.phi1)
        a2 = self.pure_amplitude(self.probe.phi2)
        return self.state.p * a1 * a2 / self.state.pure_norm

    def diag(self, centers: np.ndarray) -> float:
        val = 0.0
        if self.state.p > 0.0:
            amp = self.pure_amplitude(centers)
            val += self.state.p * amp * amp / self.state.pure_norm
        if self.state.p < 1.0 and self.state.noise is not None:
            half = 0.5 * self.probe.xi
            mass = 1.0
            for c in centers:
                mass *= self.state.noise.box_weight(c - half, c + half) / self.probe.xi
            val += (1.0 - self.state.p) * mass
        return val


def criterion_lhs_box(
    state: CvState,
    probe: BoxProbe,
    k: int,
    rel_tol: float = DEFAULT_REL_TOL,
) -> CriterionResult:
    """Finite-detector evaluation: kernel integrated against normalized boxes."""
    if not isinstance(probe, BoxProbe):
        raise InvalidProbeError("criterion_lhs_box expects a box probe")
    engine = BoxScalarEngine(state, probe, rel_tol=rel_tol)
    return evaluate_terms(
        engine.offdiag(),
        engine.diag,
        (probe.phi1, probe.phi2),
        state.n,
        k,
        probe_kind="box",
    )


def build_probe(family: str, x0: float, shift: float = 0.0, xi: float | None = None) -> Probe:
    """Standard two-point probe of a detection family.

    ghz_like (also used for the indicator and annihilated families):
    phi1 = (x0, x0, x0), phi2 = -phi1, requiring x0 != 0.
    w_like: phi1 = (x0+shift, x0, x0-shift), phi2 = (-x0-shift, -x0+shift, -x0).
    Passing a width xi yields the box version around the same centers.
    """
    if family in ("ghz_like", "indicator", "annihilated_ghz"):
        phi1 = np.array([x0, x0, x0], dtype=float)
        phi2 = -phi1
    elif family == "w_like":
        phi1 = np.array([x0 + shift, x0, x0 - shift], dtype=float)
        phi2 = np.array([-x0 - shift, -x0 + shift, -x0], dtype=float)
    else:
        raise ValueError(f"unknown probe family {family!r}")
    if xi is None:
        return SharpProbe(phi1, phi2)
    return BoxProbe(phi1, phi2, xi)


def scale_result(result: CriterionResult, factor: float) -> CriterionResult:
    """Rescale every scalar product by `factor` (degree-1 homogeneity)."""
    terms = tuple((p, t * factor) for p, t in result.partition_terms)
    lhs = result.lhs * factor
    return replace(
        result,
        offdiag_term=result.offdiag_term * factor,
        partition_terms=terms,
        lhs=lhs,
        verdict=_verdict(lhs, result.decision_tol),
    )


def mixture_criterion_lhs(
    states: Sequence[CvState], weights: Sequence[float], probe: SharpProbe, k: int
) -> CriterionResult:
    """Sharp-probe criterion for the convex mixture sum_i w_i rho_i.

    Scalar products are linear in the state, so the mixture's off-diagonal
    and diagonal values are the weighted sums of the components'.
    """
    if len(states) != len(weights) or not states:
        raise ValueError("need matching, non-empty states and weights")
    if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-12:
        raise ValueError("weights must be a convex combination")
    off = sum(
        w * offdiag_value(s, probe.phi1, probe.phi2) for s, w in zip(states, weights)
    )
    return evaluate_terms(
        off,
        lambda x: sum(w * diag_value(s, x) for s, w in zip(states, weights)),
        (probe.phi1, probe.phi2),
        states[0].n,
        k,
    )
