"""Gradient-only negative-curvature extraction and second-order stationary point search."""

from .errors import (CertificationError, CertificationUnavailableError, ConfigurationError,
                     DomainError, NeonError, NonConvergenceError, NonFiniteEvaluationError,
                     ParameterError)
from .oracle import (EvalCounter, OracleProblem, ShiftedModel, hessian_vec, rayleigh_quotient,
                     shifted_grad, shifted_value)
from .problems import (QuarticSpec, SpectrumSpec, make_quadratic, make_separable_quartic,
                       problem_constants)
from .neon import (NCOutcome, NeonParams, NeonTrace, delta_gap, derive_neon_params, nag_step,
                   nc_find, neon_gd_baseline, neon_plus, sample_sphere)
from .ag import AgAcParams, AgSscParams, ag_ac, ag_ssc
from .driver import (NcdParams, NeagParams, SSPReport, build_fk, certify_ssp,
                     derive_ncd_params, derive_neag_params, neag, neon_ncd)
from .spectral import (AugmentedOperator, EigReport, augmented_matrix, dense_min_eig,
                       eigen_gap_check, lemma1_eig_formula)

__version__ = "0.1.0"
