"""Homodyne tomography sandbox: simulate lossy quadrature records for
analytically known optical states and reconstruct Wigner-function values
from them, either by constrained per-point maximum-likelihood estimation
or by a filtered back-projection baseline.
"""

from .estimators import FilteredBackProjection, MaximumLikelihoodWigner
from .fbp import FbpConfig, fbp_grid, fbp_kernel, fbp_point
from .grids import GridSpec, parse_lattice, parse_slice
from .io import DataFormatError, load_dataset, read_table, save_dataset, write_table
from .kernels import CoefficientTable, coefficient_a, coefficient_table, fock_wavefunction
from .mle import (
    EstimateDiagnostics,
    EstimationError,
    FockWeights,
    GridRow,
    ReconstructionConfig,
    em_step,
    estimate_weights,
    log_likelihood,
    reconstruct_grid,
    reconstruct_points,
    shift_outcomes,
    wigner_from_weights,
)
from .simulate import (
    Dataset,
    HistogramResult,
    HomodyneRecord,
    apply_efficiency,
    histogram,
    sample_ideal,
    simulate,
)
from .states import (
    FockExpansion,
    StateSpec,
    fbp_expected_limit,
    fock_coefficients,
    format_state,
    parse_state,
    quadrature_pdf,
    squasi_true,
    wigner_from_expansion,
    wigner_true,
)

__version__ = "0.1.0"

__all__ = [
    "CoefficientTable",
    "Dataset",
    "DataFormatError",
    "EstimateDiagnostics",
    "EstimationError",
    "FbpConfig",
    "FilteredBackProjection",
    "FockExpansion",
    "FockWeights",
    "GridRow",
    "GridSpec",
    "HistogramResult",
    "HomodyneRecord",
    "MaximumLikelihoodWigner",
    "ReconstructionConfig",
    "StateSpec",
    "apply_efficiency",
    "coefficient_a",
    "coefficient_table",
    "em_step",
    "estimate_weights",
    "fbp_expected_limit",
    "fbp_grid",
    "fbp_kernel",
    "fbp_point",
    "fock_coefficients",
    "fock_wavefunction",
    "format_state",
    "histogram",
    "load_dataset",
    "log_likelihood",
    "parse_lattice",
    "parse_slice",
    "parse_state",
    "quadrature_pdf",
    "read_table",
    "reconstruct_grid",
    "reconstruct_points",
    "sample_ideal",
    "save_dataset",
    "shift_outcomes",
    "simulate",
    "squasi_true",
    "wigner_from_expansion",
    "wigner_from_weights",
    "wigner_true",
    "write_table",
]
