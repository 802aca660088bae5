"""Probe tuning, parameter-space scans, and detection-threshold bisection.

The probe families are one-parameter (x0), so tuning is a coarse grid
followed by golden-section refinement; a general coordinate-descent
variant over all 2n probe coordinates is available as an expert path.
Scans walk a two-axis parameter grid in deterministic row-major order and
record the criterion left-hand side and verdict per requested k; cells
whose quadrature fails are tagged rather than interpolated.  Thresholds
are located by bisection on a sign change of the left-hand side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .criterion import (
    CriterionResult,
    SharpProbe,
    build_probe,
    criterion_lhs,
    evaluate_terms,
)
from .errors import BracketError, InvalidProbeError, NumericalFailureError
from .statefile import SWEEPABLE, StateSpecDocument
from .states import CvState, diag_value, offdiag_value

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
COARSE_POINTS = 64
X0_XTOL = 1e-6


@dataclass(frozen=True)
class ProbeRule:
    """How a scan or threshold query picks its probe.

    mode 'fixed': always the family probe at x0.
    mode 'optimized': per evaluation, the family probe maximizing the lhs
    for the smallest requested k over x0 in [lo, hi].
    """

    mode: str
    x0: float | None = None
    bounds: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if self.mode not in ("fixed", "optimized"):
            raise ValueError("probe rule mode must be 'fixed' or 'optimized'")
        if self.mode == "fixed" and self.x0 is None:
            raise ValueError("fixed probe rule needs x0")
        if self.mode == "optimized" and self.bounds is None:
            raise ValueError("optimized probe rule needs bounds")


def _golden_section_max(f, lo: float, hi: float, xtol: float) -> tuple[float, float]:
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > xtol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def optimize_probe(
    state: CvState,
    k: int,
    family: str,
    bounds: tuple[float, float],
    shift: float = 0.0,
) -> tuple[SharpProbe, float]:
    """Maximize the criterion lhs over the one-parameter probe family.

    Deterministic: a 64-point coarse grid over the bounds picks the best
    cell, then golden-section refinement narrows x0 below 1e-6.  Grid
    points yielding invalid probes (orthogonality violations) are skipped.
    """
    lo, hi = bounds
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ValueError("bounds must be finite with lo < hi")

    def lhs_at(x0: float) -> float:
        try:
            probe = build_probe(family, x0, shift=shift)
        except InvalidProbeError:
            return -math.inf
        return criterion_lhs(state, probe, k).lhs

    grid = np.linspace(lo, hi, COARSE_POINTS)
    values = [lhs_at(x) for x in grid]
    best = int(np.argmax(values))
    if values[best] == -math.inf:
        raise InvalidProbeError("no valid probe in the requested x0 range")
    step = grid[1] - grid[0]
    ref_lo = max(lo, grid[best] - step)
    ref_hi = min(hi, grid[best] + step)
    x0, val = _golden_section_max(lhs_at, ref_lo, ref_hi, X0_XTOL)
    if val == -math.inf:  # refinement landed on an invalid point; keep the grid best
        x0, val = grid[best], values[best]
    return build_probe(family, x0, shift=shift), val


def optimize_probe_general(
    state: CvState,
    k: int,
    probe: SharpProbe,
    bounds: tuple[float, float],
    sweeps: int = 3,
) -> tuple[SharpProbe, float]:
    """Expert path: coordinate descent over all 2n probe coordinates.

    Each sweep refines every coordinate of phi1 and phi2 in turn by
    golden-section over the given bounds, keeping the probe valid.
    """
    phi1 = probe.phi1.copy()
    phi2 = probe.phi2.copy()
    n = phi1.size

    def lhs_for(p1: np.ndarray, p2: np.ndarray) -> float:
        try:
            return criterion_lhs(state, SharpProbe(p1, p2), k).lhs
        except InvalidProbeError:
            return -math.inf

    best = lhs_for(phi1, phi2)
    for _ in range(sweeps):
        for which, vec in (("phi1", phi1), ("phi2", phi2)):
            for i in range(n):
                def coord_obj(t: float) -> float:
                    trial = vec.copy()
                    trial[i] = t
                    return lhs_for(trial if which == "phi1" else phi1, trial if which == "phi2" else phi2)

                t_best, val = _golden_section_max(coord_obj, bounds[0], bounds[1], X0_XTOL)
                if val > best:
                    vec[i] = t_best
                    best = val
    return SharpProbe(phi1, phi2), best


# ---------------------------------------------------------------------------
# scans


@dataclass(frozen=True)
class ScanSpec:
    """Two swept axes over a state document, per-k criterion evaluation."""

    document: StateSpecDocument
    axis1: tuple[str, np.ndarray]
    axis2: tuple[str, np.ndarray]
    ks: tuple[int, ...]
    probe: ProbeRule

    def __post_init__(self) -> None:
        for name, values in (self.axis1, self.axis2):
            if name not in SWEEPABLE:
                raise ValueError(f"axis {name!r} is not sweepable; choose from {SWEEPABLE}")
            arr = np.asarray(values, dtype=float)
            if arr.ndim != 1 or arr.size < 1 or arr.size > 512:
                raise ValueError("axis grids must be 1-d with at most 512 points")
            if arr.size > 1 and not np.all(np.diff(arr) > 0):
                raise ValueError(f"axis {name!r} grid must be strictly increasing")
        if self.axis1[0] == self.axis2[0]:
            raise ValueError("the two scan axes must differ")
        if not self.ks:
            raise ValueError("at least one k required")


@dataclass(frozen=True)
class ScanCell:
    axis1_value: float
    axis2_value: float
    lhs: dict[int, float]
    fired: dict[int, bool]
    error: str | None = None


@dataclass(frozen=True)
class ScanResult:
    spec: ScanSpec
    cells: tuple[ScanCell, ...]

    def csv_rows(self) -> list[list[str]]:
        """Deterministic row-major table; full-precision floats, '.' separator."""
        header = [self.spec.axis1[0], self.spec.axis2[0]]
        for k in self.spec.ks:
            header += [f"lhs_k{k}", f"fired_k{k}"]
        rows = [header]
        for cell in self.cells:
            row = [repr(cell.axis1_value), repr(cell.axis2_value)]
            for k in self.spec.ks:
                if cell.error is not None:
                    row += ["", "error"]
                else:
                    row += [repr(cell.lhs[k]), "true" if cell.fired[k] else "false"]
            rows.append(row)
        return rows


def _cell_probe(rule: ProbeRule, doc: StateSpecDocument, state: CvState, ks: Sequence[int], x0_axis: float | None):
    shift = doc.params.get("shift", 0.0)
    if x0_axis is not None:
        return build_probe(doc.family, x0_axis, shift=shift)
    if rule.mode == "fixed":
        return build_probe(doc.family, rule.x0, shift=shift)
    probe, _ = optimize_probe(state, min(ks), doc.family, rule.bounds, shift=shift)
    return probe


def scan(spec: ScanSpec) -> ScanResult:
    """Evaluate the detection map over the grid in row-major order.

    Cells where quadrature or probe construction fails are recorded with an
    error tag and no verdict; they never abort the scan.
    """
    cells: list[ScanCell] = []
    name1, grid1 = spec.axis1
    name2, grid2 = spec.axis2
    for v1 in np.asarray(grid1, dtype=float):
        for v2 in np.asarray(grid2, dtype=float):
            updates = {name1: float(v1), name2: float(v2)}
            x0_axis = updates.pop("x0", None)
            try:
                doc = spec.document.with_updates(updates)
                state = doc.build()
                probe = _cell_probe(spec.probe, doc, state, spec.ks, x0_axis)
                lhs = {}
                fired = {}
                for k in spec.ks:
                    res = criterion_lhs(state, probe, k)
                    lhs[k] = res.lhs
                    fired[k] = res.violated
                cells.append(ScanCell(float(v1), float(v2), lhs, fired))
            except (ValueError, NumericalFailureError) as exc:
                cells.append(ScanCell(float(v1), float(v2), {}, {}, error=str(exc)))
    return ScanResult(spec, tuple(cells))


# ---------------------------------------------------------------------------
# thresholds


@dataclass(frozen=True)
class ThresholdQuery:
    """Locate the lhs = 0 crossing of one swept parameter by bisection."""

    document: StateSpecDocument
    param: str
    bracket: tuple[float, float]
    k: int
    probe: ProbeRule
    tol: float = 1e-6

    def __post_init__(self) -> None:
        if self.param not in SWEEPABLE:
            raise ValueError(f"parameter {self.param!r} is not sweepable")
        lo, hi = self.bracket
        if not lo < hi:
            raise ValueError("bracket must satisfy lo < hi")
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")


def _lhs_at_param(query: ThresholdQuery, value: float) -> float:
    if query.param == "x0":
        doc = query.document
        state = doc.build()
        probe = build_probe(doc.family, value, shift=doc.params.get("shift", 0.0))
        return criterion_lhs(state, probe, query.k).lhs
    doc = query.document.with_updates({query.param: value})
    state = doc.build()
    probe = _cell_probe(query.probe, doc, state, (query.k,), None)
    return criterion_lhs(state, probe, query.k).lhs


def find_threshold(query: ThresholdQuery) -> float:
    """Bisection on the swept parameter; requires a sign change over the bracket."""
    lo, hi = query.bracket
    f_lo = _lhs_at_param(query, lo)
    f_hi = _lhs_at_param(query, hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if math.copysign(1.0, f_lo) == math.copysign(1.0, f_hi):
        raise BracketError(
            f"no sign change over [{lo}, {hi}]: lhs({lo}) = {f_lo:.6e}, lhs({hi}) = {f_hi:.6e}"
        )
    while hi - lo > query.tol:
        mid = 0.5 * (lo + hi)
        f_mid = _lhs_at_param(query, mid)
        if f_mid == 0.0:
            return mid
        if math.copysign(1.0, f_mid) == math.copysign(1.0, f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    return 0.5 * (lo + hi)
