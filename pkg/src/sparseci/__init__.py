"""Confidence sets centred at sparse estimators: exact coverage of
hard-thresholding intervals, honest intervals, and Monte Carlo checks."""

from .coverage import (BoxInterval, CoverageCurve, coverage_at, coverage_curve, diam_box, ext_box,
                       infimal_coverage, naive_coverage_at)
from .estimators import (RegressionDesign, ThresholdSchedule, hard_threshold, post_bic_ls,
                         sparsity_prob_at_zero)
from .gaussian import phi_cdf, phi_pdf, phi_quantile
from .honest import (HonestSolution, asymptotic_halfwidth, max_oracle_halfwidth, oracle_halfwidth,
                     solve_honest_halfwidth)
from .simulate import (LocationModel, McEstimate, MovingParameterPlan, demo_partial_sparsity,
                       demo_theorem1, demo_uniform_rate, mc_probability)

__all__ = [
    "BoxInterval", "CoverageCurve", "coverage_at", "coverage_curve", "diam_box", "ext_box",
    "infimal_coverage", "naive_coverage_at", "RegressionDesign", "ThresholdSchedule",
    "hard_threshold", "post_bic_ls", "sparsity_prob_at_zero", "phi_cdf", "phi_pdf", "phi_quantile",
    "HonestSolution", "asymptotic_halfwidth", "max_oracle_halfwidth", "oracle_halfwidth",
    "solve_honest_halfwidth", "LocationModel", "McEstimate", "MovingParameterPlan",
    "demo_partial_sparsity", "demo_theorem1", "demo_uniform_rate", "mc_probability",
]
