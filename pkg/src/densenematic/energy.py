"""The macroscopic energy J(Q, eta), its derivatives, the thermal energy,
the singular-potential bound and the equation of state."""
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .dual import ConvergenceError, DomainError, solve_lambda, TOL, MAX_ITER
from .quadrature import DEFAULT_NPHI, DEFAULT_NU, kink_rule
from .tensor3 import TracelessSym3, as_sym3, diag_coords, in_physical_set

ETA_FLAT = -2.0 / 15.0


class SaturationError(ValueError):
    """Density at or beyond the saturation limit."""


@dataclass(frozen=True)
class MaterialParams:
    """Material constants in physical units.

    c, d are the excluded-volume constants, U, a, b the attractive
    interaction constants and kT the thermal energy.
    """

    c: float
    d: float
    U: float = 0.0
    a: float = 0.0
    b: float = 0.0
    kT: float = 1.0

    def __post_init__(self):
        if not (self.c > 0 and self.d > 0):
            raise ValueError("c and d must be positive")
        if not self.d / (3.0 * self.c - 2.0 * self.d) > 0:
            raise ValueError("need d/(3c - 2d) > 0")
        if not self.kT > 0:
            raise ValueError("kT must be positive")

    def eta(self, rho):
        """Packing parameter 2(rho c - 1)/(3 rho d)."""
        if not rho > 0:
            raise ValueError("number density must be positive")
        return 2.0 * (rho * self.c - 1.0) / (3.0 * rho * self.d)

    def rho(self, eta):
        """Inverse of eta(rho)."""
        return 1.0 / (self.c - 1.5 * self.d * eta)

    @property
    def rho_saturation(self):
        """Density where eta reaches 2/3; infinite when c <= d."""
        return 1.0 / (self.c - self.d) if self.c > self.d else math.inf

    def tau(self, rho):
        """Dimensionless temperature 2kT/(rho b U)."""
        if not (self.b > 0 and self.U > 0):
            raise ValueError("tau needs b, U > 0")
        return 2.0 * self.kT / (rho * self.b * self.U)


def _state(Q, eta, **kw):
    return solve_lambda(as_sym3(Q), eta, **kw)


def derivatives(state):
    """(dJ/dQ, dJ/deta) at a solved state.

    Both come from the same tilted integral over E_Q without the kink
    factor: with g = exp(Lambda p.p) / Z,
    dJ/dQ = Lambda - int g (p x p - I/3), dJ/deta = int g.
    """
    log_c, mean, _ = state.tilted(state.rule.w)
    ratio = math.exp(log_c - state.log_z)
    grad = state.Lambda - state.to_frame(ratio * mean)
    return grad, ratio


def j_value(Q, eta, **kw):
    return _state(Q, eta, **kw).value


def j_grad(Q, eta, **kw):
    return derivatives(_state(Q, eta, **kw))[0]


def j_deta(Q, eta, **kw):
    return derivatives(_state(Q, eta, **kw))[1]


def j_thermal(Q, eta, tau, **kw):
    """(J - |Q|^2/(2 tau), dJ/dQ - Q/tau)."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    Q = as_sym3(Q)
    st = _state(Q, eta, **kw)
    g, _ = derivatives(st)
    return st.value - Q.norm2() / (2.0 * tau), g - Q / tau


def hessian_coefficient(eta):
    """Multiple of the identity giving the Hessian of J at Q = 0."""
    return 7.5 * (1.0 + 2.0 / (15.0 * eta)) ** 2


def tau_critical(eta):
    """Threshold 15/2 (1 + 2/(15 eta))^-2 for the isotropic state.

    Infinite at eta = -2/15. Note that the Hessian of the thermal energy at
    zero is (hessian_coefficient(eta) - 1/tau) Id, so the sign actually
    changes at tau_flip(eta), not here.
    """
    eta = float(eta)
    if not eta < 0:
        raise ValueError("tau_critical needs eta < 0")
    if abs(eta - ETA_FLAT) < 1e-15:
        return math.inf
    return 7.5 * (1.0 + 2.0 / (15.0 * eta)) ** -2


def tau_flip(eta):
    """tau at which the Hessian of the thermal energy at 0 changes sign."""
    k = hessian_coefficient(float(eta))
    return math.inf if k == 0 else 1.0 / k


@dataclass(frozen=True)
class HessianAtZero:
    H: np.ndarray
    analytic: float
    max_deviation: float
    max_offdiag: float

    @property
    def coefficient(self):
        return float(np.mean(np.diag(self.H)))


def fd_hessian(grad, x, h):
    """Central-difference Jacobian of a gradient map on R^n, symmetrised."""
    n = x.size
    H = np.empty((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        H[:, k] = (grad(x + e) - grad(x - e)) / (2.0 * h)
    return 0.5 * (H + H.T)


def hessian_at_zero(eta, h=1e-3, **kw):
    """Finite-difference Hessian of J at Q = 0 against the analytic multiple
    of the identity."""
    eta = float(eta)
    if not eta < 0:
        raise ValueError("Q = 0 is outside the domain for eta >= 0")
    H = fd_hessian(lambda c: j_grad(TracelessSym3(c), eta, **kw).coords, np.zeros(5), h)
    k = hessian_coefficient(eta)
    off = H - np.diag(np.diag(H))
    return HessianAtZero(H, k, float(np.max(np.abs(H - k * np.eye(5)))), float(np.max(np.abs(off))))


def singular_potential(Q, tol=TOL, max_iter=MAX_ITER, n_u=DEFAULT_NU, n_phi=DEFAULT_NPHI):
    """Minimum entropy int f ln f over densities with second moment Q,
    via its dual max_lam lam.Q - log int exp(lam p.p) dp."""
    Q = as_sym3(Q)
    if not in_physical_set(Q):
        raise DomainError("domain violation: eigenvalue constraint: v_min(Q) <= -1/3")
    # any eta below the smallest eigenvalue gives a plain sphere rule in the eigenframe
    rule = kink_rule(Q, -1.0, n_u, n_phi, octant=True)
    lam, log_z, gnorm, it, ok = kernels.dual_newton(
        rule.features("eig"), rule.w, diag_coords(*rule.q), np.zeros(2), tol, max_iter)
    if not ok:
        raise ConvergenceError("singular potential did not converge (|grad| = %.3e)" % gnorm)
    return float(lam @ diag_coords(*rule.q) - log_z)


def pressure_dimensionless(Q, eta, **kw):
    """P* = int f_Q / (Qp.p - eta) dp, i.e. dJ/deta."""
    return j_deta(Q, eta, **kw)


def eos_pressure(params, rho, Q, **kw):
    """Pressure k T rho int f_Q / (1 - rho (c - 3/2 d Qp.p)) dp in physical units."""
    rho = float(rho)
    if not rho > 0:
        raise ValueError("number density must be positive")
    if rho >= params.rho_saturation:
        raise SaturationError("saturation limit: rho >= rho_s = %r" % params.rho_saturation)
    Q = as_sym3(Q)
    st = _state(Q, params.eta(rho), **kw)
    r = st.rule
    denom = 1.0 - rho * (params.c - 1.5 * params.d * (r.p * r.p) @ r.q)
    log_i, _, _ = st.tilted(r.w * r.s / denom)
    return params.kT * rho * math.exp(log_i - st.log_z)


def pressure_from_dimensionless(params, pstar):
    """Physical pressure from P*: P = 2 kT P* / (3 d)."""
    return 2.0 * params.kT * pstar / (3.0 * params.d)


def primal_energy(state):
    """int f ln f - f ln(Qp.p - eta) evaluated directly on the optimal density."""
    r = state.rule
    s = r.s
    pos = s > 0
    log_f = state.Lambda.quad(r.nodes[pos]) - state.log_z + np.log(s[pos])
    f = np.exp(log_f)
    return float(np.sum(r.w[pos] * f * (log_f - np.log(s[pos]))))
