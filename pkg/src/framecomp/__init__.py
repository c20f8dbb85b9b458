"""Optimal frame completions with prescribed norms.

Submodules: :mod:`vecmaj` (majorization kernel), :mod:`waterfill`,
:mod:`optspec` (optimal spectrum), :mod:`linop` (frames and constructions),
:mod:`fod` (frame operator distance), :mod:`verify` (descent experiments)
and :mod:`cli`.
"""

from .errors import (DimMismatch, DomainError, FrameCompError, IndexOutOfRange,
                     InfeasibleDesign, InternalPairingError, LengthMismatch,
                     NoConvergence, NotBlockStructured, PreconditionError)
from .fod import (FodSolution, UINorm, fod_equals_potential_const, fod_minimum,
                  fod_uniqueness_check, parse_norm, uin_eval)
from .linop import (FrameSeq, HermMat, eig_herm, frame_operator, optimal_completion,
                    potential, random_completion, schur_horn_design)
from .optspec import (BlockAnalysis, OptimalSpectrum, analyze_completion, avg_P,
                      majorization_bound_check, optimal_spectrum)
from .vecmaj import (ConvexFn, SpectrumVec, majorizes, parse_phi, sort_asc,
                     sort_desc, strict_major_equal_implies_perm, submajorizes,
                     trace_phi)
from .verify import (DescentConfig, DescentReport, descend_orbit, descend_Ta,
                     riemannian_grad, strict_descent_certificate)
from .waterfill import (FeasibilityReport, WaterfillResult, h_lambda,
                        is_feasible_index, is_feasible_pair, minimal_feasible_index,
                        waterfill_a, waterfill_t)

__version__ = "0.1.0"

__all__ = [
    "DimMismatch",
    "DomainError",
    "FrameCompError",
    "IndexOutOfRange",
    "InfeasibleDesign",
    "InternalPairingError",
    "LengthMismatch",
    "NoConvergence",
    "NotBlockStructured",
    "PreconditionError",
    "FodSolution",
    "UINorm",
    "fod_equals_potential_const",
    "fod_minimum",
    "fod_uniqueness_check",
    "parse_norm",
    "uin_eval",
    "FrameSeq",
    "HermMat",
    "eig_herm",
    "frame_operator",
    "optimal_completion",
    "potential",
    "random_completion",
    "schur_horn_design",
    "BlockAnalysis",
    "OptimalSpectrum",
    "analyze_completion",
    "avg_P",
    "majorization_bound_check",
    "optimal_spectrum",
    "ConvexFn",
    "SpectrumVec",
    "majorizes",
    "parse_phi",
    "sort_asc",
    "sort_desc",
    "strict_major_equal_implies_perm",
    "submajorizes",
    "trace_phi",
    "DescentConfig",
    "DescentReport",
    "descend_orbit",
    "descend_Ta",
    "riemannian_grad",
    "strict_descent_certificate",
    "FeasibilityReport",
    "WaterfillResult",
    "h_lambda",
    "is_feasible_index",
    "is_feasible_pair",
    "minimal_feasible_index",
    "waterfill_a",
    "waterfill_t",
]

