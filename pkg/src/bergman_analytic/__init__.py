"""Bergman kernel expansion coefficients from a real-analytic Kähler potential.

The coefficients ``b_m`` of ``K_k(x, y) ~ (k/pi)^n e^{k psi(x, yb)} sum_m b_m k^-m``
are computed as truncated Taylor jets by a linear recursion, in exact
Gaussian-rational or in floating-point arithmetic, and checked against
closed-form and quadrature oracles.
"""

from . import potentials
from .asymptotics import (certify, diastasis_decay_check, growth_fit, kernel_expansion_eval,
                          optimal_truncation, remainder_scan, sup_norm_estimate)
from .errors import BergmanError
from .geometry import (PotentialJet, diastasis, hessian_check, metric_from_potential, polarize,
                       scalar_curvature)
from .jets import Jet, VarLayout
from .oracles import (KernelModel, QuadratureSpec, RadialProfile, radial_gram_kernel,
                      radial_origin_coefficients, reproducing_test, wick_moment)
from .recursion import CoefficientTable, compute_all, required_order

__version__ = "0.1.0"

__all__ = [
    "potentials", "BergmanError", "Jet", "VarLayout", "PotentialJet", "metric_from_potential",
    "polarize", "diastasis", "hessian_check", "scalar_curvature", "CoefficientTable",
    "compute_all", "required_order", "KernelModel", "QuadratureSpec", "RadialProfile",
    "radial_gram_kernel", "radial_origin_coefficients", "reproducing_test", "wick_moment",
    "kernel_expansion_eval", "remainder_scan", "sup_norm_estimate", "growth_fit",
    "optimal_truncation", "diastasis_decay_check", "certify",
]
