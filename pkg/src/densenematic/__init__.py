"""Dense nematic liquid-crystal equilibria."""
from .tensor3 import TracelessSym3, EigenFrame, eig, uniaxial, in_domain_of_J
from .quadrature import SphereRule, IntervalRule, integrate_plus, integrate_indicator, fourth_moment_map
from .dual import (DualState, DomainError, ConvergenceError, dual_objective, dual_grad, dual_hess,
                   solve_lambda, density_eval)
from .energy import (MaterialParams, SaturationError, j_value, j_grad, j_deta, j_thermal, tau_critical, tau_flip,
                     hessian_at_zero, singular_potential, pressure_dimensionless, eos_pressure)
from .equilibria import (CriticalPoint, Branch, find_critical_biaxial, global_minimize, el_residual,
                         uniaxial_j, trace_branch, stability_classify, saturation_diagnostics,
                         find_eta0)
from .kernels import BACKEND

__version__ = "0.1.0"
