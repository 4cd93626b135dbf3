"""The concave dual problem behind J(Q, eta).

For an admissible Q the optimal density with second moment Q is

    f_Q(p) = exp(Lambda p.p) max(Qp.p - eta, 0) / Z,

where Lambda maximises F(Q, lam) = lam.Q - log int exp(lam p.p) max(Qp.p - eta, 0) dp.
Lambda shares the eigenframe of Q, so the solver works with the two diagonal
coordinates of lam in that frame.
"""
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels
from .quadrature import DEFAULT_NPHI, DEFAULT_NU, KinkRule, kink_rule
from .tensor3 import TracelessSym3, as_sym3, diag_coords, domain_violation

TOL = 1e-10
MAX_ITER = 200
POLISH = 1e-14


class DomainError(ValueError):
    """Input outside the domain of J."""


class ConvergenceError(RuntimeError):
    """Iteration did not converge; ``last`` holds the final iterate."""

    def __init__(self, msg, last=None):
        super().__init__(msg)
        self.last = last


def check_domain(Q, eta):
    why = domain_violation(Q, eta)
    if why is not None:
        raise DomainError("domain violation: %s" % why)


@dataclass(frozen=True)
class DualState:
    """Solved dual problem for (Q, eta)."""

    Q: TracelessSym3
    eta: float
    Lambda: TracelessSym3
    log_z: float
    grad_norm: float
    iterations: int
    converged: bool
    rule: KinkRule = field(repr=False)
    lam_eig: np.ndarray = field(repr=False)
    resolution: tuple = (DEFAULT_NU, DEFAULT_NPHI)

    @property
    def Z(self):
        return float(np.exp(self.log_z))

    @property
    def value(self):
        """The dual optimum, i.e. J(Q, eta)."""
        return self.Lambda.dot(self.Q) - self.log_z

    def tilted(self, weights, second=False):
        """(log integral, normalised mean features) of exp(Lambda p.p) times the
        given per-node weights, in eigenframe diagonal coordinates."""
        return kernels.tilted_moments(self.rule.features("eig"), weights, self.lam_eig, second)

    def to_frame(self, c2):
        """Rotate the diagonal tensor with eigenframe coordinates c2 back."""
        c = np.zeros(5)
        c[:2] = c2
        return TracelessSym3(c).rotate(self.rule.R)


def _full_rule_features(Q, eta, n_u, n_phi):
    rule = kink_rule(Q, eta, n_u, n_phi)
    return rule.features("orig"), rule.w * rule.s


def dual_objective(Q, lam, eta, n_u=DEFAULT_NU, n_phi=DEFAULT_NPHI):
    """F(Q, lam) = lam.Q - log int exp(lam p.p) max(Qp.p - eta, 0) dp."""
    Q, lam = as_sym3(Q), as_sym3(lam)
    check_domain(Q, eta)
    F, w = _full_rule_features(Q, eta, n_u, n_phi)
    log_z, _, _ = kernels.tilted_moments(F, w, lam.coords, False)
    return lam.dot(Q) - log_z


def dual_grad(Q, lam, eta, n_u=DEFAULT_NU, n_phi=DEFAULT_NPHI):
    """Gradient of F in lam: Q minus the mean of p x p - I/3 under the tilted density."""
    Q, lam = as_sym3(Q), as_sym3(lam)
    check_domain(Q, eta)
    F, w = _full_rule_features(Q, eta, n_u, n_phi)
    _, mean, _ = kernels.tilted_moments(F, w, lam.coords, False)
    return TracelessSym3(Q.coords - mean)


def dual_hess(Q, lam, eta, n_u=DEFAULT_NU, n_phi=DEFAULT_NPHI):
    """Covariance of p x p - I/3 under the tilted density (5x5, positive
    definite); the Hessian of F in lam is its negative."""
    Q, lam = as_sym3(Q), as_sym3(lam)
    check_domain(Q, eta)
    F, w = _full_rule_features(Q, eta, n_u, n_phi)
    _, mean, m2 = kernels.tilted_moments(F, w, lam.coords, True)
    cov = m2 - np.outer(mean, mean)
    return 0.5 * (cov + cov.T)


@lru_cache(maxsize=512)
def _solve_cached(coords, eta, n_u, n_phi, tol, max_iter):
    return _solve(TracelessSym3(np.array(coords)), eta, None, n_u, n_phi, tol, max_iter)


def _solve(Q, eta, lam0, n_u, n_phi, tol, max_iter):
    rule = kink_rule(Q, eta, n_u, n_phi, octant=True)
    F = rule.features("eig")
    w = rule.w * rule.s
    target = diag_coords(*rule.q)
    if lam0 is None:
        start = np.zeros(2)
    else:
        start = as_sym3(lam0).rotate(rule.R.T).coords[:2]
    lam, log_z, gnorm, it, ok = kernels.dual_newton(F, w, target, start, tol, max_iter)
    if ok and gnorm > POLISH:
        # Newton is quadratic here: a step or two more takes lam to roundoff, so
        # solves from different starts agree far below tol
        lam2, log_z2, g2, it2, _ = kernels.dual_newton(F, w, target, lam, POLISH, 2)
        if g2 < gnorm:
            lam, log_z, gnorm, it = lam2, log_z2, g2, it + it2
    c = np.zeros(5)
    c[:2] = lam
    Lam = TracelessSym3(c).rotate(rule.R)
    state = DualState(Q, float(eta), Lam, float(log_z), float(gnorm), int(it), bool(ok), rule, lam,
                      (n_u, n_phi))
    if not ok:
        raise ConvergenceError(
            "dual Newton did not converge after %d iterations (|grad| = %.3e)" % (it, gnorm), state)
    return state


def solve_lambda(Q, eta, lam0=None, tol=TOL, max_iter=MAX_ITER, n_u=DEFAULT_NU, n_phi=DEFAULT_NPHI):
    """Maximise the dual objective for fixed (Q, eta).

    ``lam0`` is an optional warm start (any frame). Raises DomainError outside
    the domain of J and ConvergenceError if Newton stalls.
    """
    Q = as_sym3(Q)
    eta = float(eta)
    check_domain(Q, eta)
    if lam0 is None:
        return _solve_cached(tuple(Q.coords), eta, n_u, n_phi, tol, max_iter)
    return _solve(Q, eta, lam0, n_u, n_phi, tol, max_iter)


def density_eval(state, p):
    """f_Q at unit vector(s) p."""
    p = np.asarray(p, dtype=float)
    s = np.maximum(state.Q.quad(p) - state.eta, 0.0)
    return np.exp(state.Lambda.quad(p) - state.log_z) * s


def moment_residual(state):
    """|Q - int f_Q (p x p - I/3) dp| over the full 5 coordinates."""
    rule = kink_rule(state.Q, state.eta, *state.resolution, octant=False)
    _, mean, _ = kernels.tilted_moments(rule.features("orig"), rule.w * rule.s,
                                        state.Lambda.coords, False)
    return float(np.linalg.norm(state.Q.coords - mean))
