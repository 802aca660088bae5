"""Detection of partial (k-)inseparability in continuous-variable multipartite states.

A k-separable state must satisfy, for every fully separable two-point
probe, a permutation-swap inequality between one off-diagonal matrix
element and geometric means of diagonal elements at block-swapped points;
violation witnesses k-inseparability (k = 2: genuine multipartite
entanglement).  The package evaluates that inequality exactly on analytic
state kernels, tunes probes, scans parameter spaces, and simulates the
finite-detector measurement protocol.
"""

__version__ = "0.1.0"

from .criterion import (
    BoxProbe,
    CriterionResult,
    SharpProbe,
    build_probe,
    criterion_lhs,
    criterion_lhs_box,
)
from .experiment import (
    EffectiveQubitState,
    ObservableExpansion,
    UncertaintyBudget,
    box_scalar_products,
    decomposed_lhs_n3k2,
    effective_qubit_state,
    efficiency_scale,
    pauli_expectations,
    propagate_uncertainty,
)
from .optimize import (
    ProbeRule,
    ScanSpec,
    ThresholdQuery,
    find_threshold,
    optimize_probe,
    optimize_probe_general,
    scan,
)
from .partitions import (
    SetPartition,
    bell_number,
    block_swap,
    enumerate_partitions,
    partition_count,
)
from .statefile import (
    StateSpecDocument,
    conventions_block,
    load_state_document,
    parse_state_document,
)
from .states import (
    CvState,
    DiagonalNoise,
    GaussianSumState,
    IndicatorState,
    PolyGaussianState,
    QuadraticExponent,
    annihilate,
    build_family_state,
    diag_value,
    eval_wavefunction,
    normalization_constant,
    offdiag_value,
)

__all__ = [name for name in dir() if not name.startswith("_")]
