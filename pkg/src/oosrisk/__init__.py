"""Conditional in-sample and out-of-sample risks of James-Stein-type shrinkage estimators."""

from .asymptotics import (
    AsymptoticRegime, PhaseVerdict, R_limit, delta_hat_plug_in, finite_sup_risk,
    phase_classify, r_limit, sup_R,
)
from .chisq_moments import InvMomentQuery, inv_moment, moment_ratio
from .linmodel import (
    DegenerateDesignError, DesignMatrix, ModelSpec, ResponseVector, beta_along_eigvec,
    sample_design, sample_response,
)
from .risk_exact import (
    RiskReport, ShrinkageConfig, js_c, ml_risks, relative_oos, risk_report,
    shrink_risk_in, shrink_risk_out,
)

__version__ = "0.1.0"
