"""Numerical toolkit for Orlicz-Morrey norms and composition operators."""

__version__ = "0.1.0"

from .appendix import appendix_a_embedding, appendix_b_sandwich
from .compose import (AffineMap, DiffeoSample, compose, diag_opnorm_lower, dilation_opnorm,
                      indicator_transfer_check, measure_dilation_constant, necessity_certificate,
                      orthogonal_invariance_check, rescaling_bound_check, sufficiency_bound, svd_small)
from .domain import Ball, BoxRegion, Cube, SimpleFunction
from .errors import (DomainError, OrliczLabError, PreconditionError, RankDeficiencyError,
                     UnsupportedMapError, UsageError)
from .growth import (GrowthFunction, certify_class, constant, log_grid, morrey, oscillating,
                     power_law, psi_monotonicity)
from .indicators import BoxSpec, box_indicator_norm, box_norm_asymptotic, halfcylinder_norm
from .norms import (NormEstimate, SearchSpec, luxemburg_norm, orlicz_morrey_norm,
                    weak_luxemburg_norm, weak_norm_identity, weak_orlicz_morrey_norm)
from .young import (YoungFunction, appendix_exp, certify_young, generalized_inverse, power,
                    verify_inverse_sandwich)

__all__ = [
    "AffineMap", "Ball", "BoxRegion", "BoxSpec", "Cube", "DiffeoSample", "DomainError",
    "GrowthFunction", "NormEstimate", "OrliczLabError", "PreconditionError", "RankDeficiencyError",
    "SearchSpec", "SimpleFunction", "UnsupportedMapError", "UsageError", "YoungFunction",
    "appendix_a_embedding", "appendix_b_sandwich", "appendix_exp", "box_indicator_norm",
    "box_norm_asymptotic", "certify_class", "certify_young", "compose", "constant",
    "diag_opnorm_lower", "dilation_opnorm", "generalized_inverse", "halfcylinder_norm",
    "indicator_transfer_check", "log_grid", "luxemburg_norm", "measure_dilation_constant",
    "morrey", "necessity_certificate", "orlicz_morrey_norm", "orthogonal_invariance_check",
    "oscillating", "power", "power_law", "psi_monotonicity", "rescaling_bound_check",
    "sufficiency_bound", "svd_small", "verify_inverse_sandwich", "weak_luxemburg_norm",
    "weak_norm_identity", "weak_orlicz_morrey_norm",
]
