"""Numerical white-noise analysis of the stochastic current of fractional Brownian motion.

Submodules
----------
numerics     quadrature, incomplete gamma, truncated exponential, Cauchy coefficients
functions    Hermite series, indicators and grid functions on the line
frac_ops     the fractional operators M_-^H, M_+^H and the kernels eta_t
gaussian     fBm covariance, path sampling, joint Gaussian draws
stransform   test functions, U-functionals, Donsker delta S-transforms, Monte Carlo oracle
current      membership rules and S-transforms of the current, incomplete-gamma identity
chaos        Hermite polynomials, chaos-kernel pairings, Taylor reconstruction
cli          the ``fbmcurrent`` experiment runner
"""
from .errors import ConvergenceError, DomainError, EvaluationError, NotAMemberError, PreconditionError
from .frac_ops import HurstParam, apply_m_minus, apply_m_plus, eta, eta_inner, k_constant
from .functions import GridFunction, HermiteSeries, Indicator
from .stransform import DonskerSpec, TestFunction
from .current import CurrentSpec, membership, s_current, s_current_truncated
from .chaos import MultiIndex, kernel_pairing, taylor_reconstruct, truncated_kernel_pairing

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError", "DomainError", "EvaluationError", "NotAMemberError", "PreconditionError",
    "HurstParam", "apply_m_minus", "apply_m_plus", "eta", "eta_inner", "k_constant",
    "GridFunction", "HermiteSeries", "Indicator", "DonskerSpec", "TestFunction",
    "CurrentSpec", "membership", "s_current", "s_current_truncated",
    "MultiIndex", "kernel_pairing", "taylor_reconstruct", "truncated_kernel_pairing",
]
