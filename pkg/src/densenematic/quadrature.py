"""Quadrature on the sphere and on intervals, with exact handling of the kink
of max(Qp.p - eta, 0).

The sphere rules are Gauss-Legendre in u = cos(theta) times the periodic
trapezoid rule in the azimuth. For the kinked integrands the polar axis is an
eigenvector of Q. Writing the equatorial part of Qp.p as
a(phi) = q_i cos^2 phi + q_j sin^2 phi, the kink for fixed phi sits at

    u0(phi)^2 = (eta - a(phi)) / (q_pole - a(phi)),

so the u-integral is split there and each panel carries an integrand that is
smooth in u. The pole is the eigenvector of the smallest eigenvalue when the
admissible set E_Q is an equatorial band and that of the largest eigenvalue
when it is a pair of caps. With that choice u0 stays inside (0, 1) for every
phi and the azimuthal integrand stays smooth and periodic.

When eta approaches the middle eigenvalue the split point behaves like
sqrt(eps + c phi^2) near one azimuth and the trapezoid rule loses its
spectral rate. The azimuth is then reparametrised by the periodic map
phi = psi - (c/2) sin(2 (psi - phi*)), which clusters nodes around that
azimuth while keeping the integrand periodic and analytic in psi.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .tensor3 import BASIS, as_sym3, eig

DEFAULT_NU = 64
DEFAULT_NPHI = 128
SLIVER = 1e-8


@lru_cache(maxsize=64)
def _leggauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@dataclass(frozen=True)
class IntervalRule:
    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    def gauss(cls, n, a=-1.0, b=1.0):
        x, w = _leggauss(n)
        h = 0.5 * (b - a)
        return cls(0.5 * (a + b) + h * x, h * w)

    @classmethod
    def split(cls, n, points, a=-1.0, b=1.0):
        """Composite Gauss rule with n nodes on each panel between breakpoints.

        Breakpoints within SLIVER of a panel edge are dropped so no panel is
        degenerate.
        """
        edges = [a]
        for t in sorted(points):
            if edges[-1] + SLIVER < t < b - SLIVER:
                edges.append(t)
        edges.append(b)
        parts = [cls.gauss(n, lo, hi) for lo, hi in zip(edges[:-1], edges[1:])]
        return cls(np.concatenate([r.nodes for r in parts]),
                   np.concatenate([r.weights for r in parts]))

    def integrate(self, values):
        return np.tensordot(self.weights, values, axes=(0, 0))


def _sphere_points(u, phi, pole, eq):
    """Unit vectors with component u along axis ``pole`` and azimuth phi in
    the plane of axes ``eq``; u and phi broadcast together."""
    r = np.sqrt(np.clip(1.0 - u * u, 0.0, None))
    p = np.empty(np.broadcast(u, phi).shape + (3,))
    p[..., pole] = u
    p[..., eq[0]] = r * np.cos(phi)
    p[..., eq[1]] = r * np.sin(phi)
    return p


@dataclass(frozen=True)
class SphereRule:
    """Plain product rule on the unit sphere; weights sum to 4 pi."""

    nodes: np.ndarray
    weights: np.ndarray
    n_u: int
    n_phi: int

    @classmethod
    def product(cls, n_u=DEFAULT_NU, n_phi=DEFAULT_NPHI):
        x, w = _leggauss(n_u)
        phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
        U, PHI = np.meshgrid(x, phi, indexing="ij")
        p = _sphere_points(U, PHI, 2, (0, 1)).reshape(-1, 3)
        W = np.repeat(w, n_phi) * (2.0 * np.pi / n_phi)
        return cls(p, W, n_u, n_phi)

    def integrate(self, values):
        return np.tensordot(self.weights, values, axes=(0, 0))


@dataclass(frozen=True)
class KinkRule:
    """Quadrature for integrals over E_Q = {Qp.p > eta} with the kink resolved.

    ``p`` holds nodes in the eigenframe of Q (columns of ``R``), ``w`` the
    weights and ``s`` the values of max(Qp.p - eta, 0) at the nodes. With
    ``octant=True`` the rule only covers one octant of the eigenframe with
    folded weights; it is then exact-equivalent to the full rule for
    integrands that are even in every eigenframe coordinate.
    """

    p: np.ndarray
    w: np.ndarray
    s: np.ndarray
    R: np.ndarray
    q: np.ndarray
    eta: float
    octant: bool

    @property
    def nodes(self):
        """Nodes in the original frame."""
        return self.p @ self.R.T

    @property
    def empty(self):
        return self.w.size == 0

    def features(self, frame="eig"):
        """Coordinates of p x p - I/3 in the tensor basis, one row per node.

        In the eigenframe only the two diagonal basis elements are returned.
        """
        p = self.p if frame == "eig" else self.nodes
        if frame == "eig":
            B = BASIS[:2]
        else:
            B = BASIS
        diag = np.einsum("kii->ki", B)
        F = (p * p) @ diag.T
        if frame != "eig":
            F[:, 2] = np.sqrt(2.0) * p[:, 0] * p[:, 1]
            F[:, 3] = np.sqrt(2.0) * p[:, 0] * p[:, 2]
            F[:, 4] = np.sqrt(2.0) * p[:, 1] * p[:, 2]
        return np.ascontiguousarray(F)


def kink_rule(Q, eta, n_u=DEFAULT_NU, n_phi=DEFAULT_NPHI, octant=False):
    frame = eig(Q)
    q = frame.values
    eta = float(eta)
    if octant and (n_u % 2 or n_phi % 4):
        raise ValueError("octant rules need even n_u and n_phi divisible by 4")
    psi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    phi, dphi = psi, np.ones(n_phi)
    x, wx = _leggauss(n_u)

    def cluster(centre):
        # near-tangency: eta within a small fraction of the spread of q from q2
        eps = abs(eta - q[1]) / (q[0] - q[2])
        c = max(0.0, 1.0 - 2.0 * np.sqrt(eps))
        return psi - 0.5 * c * np.sin(2.0 * (psi - centre)), 1.0 - c * np.cos(2.0 * (psi - centre))

    def panels(lo, hi):
        # lo, hi: (n_phi,) panel ends -> (n_phi, n_u) nodes and weights
        h = 0.5 * (hi - lo)[:, None]
        return 0.5 * (hi + lo)[:, None] + h * x[None, :], h * wx[None, :]

    if eta >= q[0]:
        z = np.zeros((0, 3))
        return KinkRule(z, np.zeros(0), np.zeros(0), frame.R, q, eta, octant)
    if eta < q[2]:
        pole, eq = 2, (0, 1)
        U, W = panels(-np.ones(n_phi), np.ones(n_phi))
    elif eta < q[1]:
        # band around the e3-equator: support |u| < u0
        pole, eq = 2, (0, 1)
        phi, dphi = cluster(0.5 * np.pi)
        a = q[0] * np.cos(phi) ** 2 + q[1] * np.sin(phi) ** 2
        u0 = np.sqrt((a - eta) / (a - q[2]))
        u0 = np.where(u0 > 1.0 - SLIVER, 1.0, u0)
        U, W = panels(-u0, u0)
    else:
        # caps around +-e1: support |u| > u0
        pole, eq = 0, (1, 2)
        phi, dphi = cluster(0.0)
        a = q[1] * np.cos(phi) ** 2 + q[2] * np.sin(phi) ** 2
        u0 = np.sqrt(np.clip((eta - a) / (q[0] - a), 0.0, 1.0))
        u0 = np.where(u0 < SLIVER, 0.0, u0)
        U1, W1 = panels(-np.ones(n_phi), -u0)
        U2, W2 = panels(u0, np.ones(n_phi))
        U, W = np.hstack([U1, U2]), np.hstack([W1, W2])

    W = W * (2.0 * np.pi / n_phi) * dphi[:, None]
    PHI = np.broadcast_to(phi[:, None], U.shape)
    if octant:
        keep_phi = np.arange(n_phi) <= n_phi // 4
        fold = np.where((np.arange(n_phi) == 0) | (np.arange(n_phi) == n_phi // 4), 2.0, 4.0)
        W = W * fold[:, None] * 2.0
        keep = keep_phi[:, None] & (U > 0.0)
        U, W, PHI = U[keep], W[keep], PHI[keep]
    else:
        U, W, PHI = U.ravel(), W.ravel(), PHI.ravel()
    p = _sphere_points(U, PHI, pole, eq)
    s = (p * p) @ q - eta
    s = np.clip(s, 0.0, None)
    return KinkRule(p, W, s, frame.R, q, eta, octant)


def _apply(rule, g, weight):
    if rule.empty:
        vals = g(np.zeros((1, 3)))
        return np.zeros_like(np.asarray(vals, dtype=float)[0])
    vals = np.asarray(g(rule.nodes), dtype=float)
    if vals.ndim == 0:
        vals = np.full(rule.w.shape, float(vals))
    return np.tensordot(rule.w * weight(rule), vals, axes=(0, 0))


def _with_error(fn, Q, eta, g, n_u, n_phi):
    fine = fn(Q, eta, g, n_u, n_phi)
    coarse = fn(Q, eta, g, max(n_u // 2, 2), max(n_phi // 2, 4))
    return fine, float(np.max(np.abs(np.asarray(fine) - np.asarray(coarse))))


def integrate_plus(Q, eta, g, n_u=DEFAULT_NU, n_phi=DEFAULT_NPHI, estimate_error=False):
    """Integral over the sphere of g(p) max(Qp.p - eta, 0).

    ``g`` maps an (N, 3) array of unit vectors to values of shape (N, ...).
    With ``estimate_error`` the pair (value, discrepancy against a rule of
    half the resolution) is returned.
    """
    if estimate_error:
        return _with_error(integrate_plus, Q, eta, g, n_u, n_phi)
    rule = kink_rule(as_sym3(Q), eta, n_u, n_phi)
    return _apply(rule, g, lambda r: r.s)


def integrate_indicator(Q, eta, g, n_u=DEFAULT_NU, n_phi=DEFAULT_NPHI, estimate_error=False):
    """Integral of g over E_Q = {p : Qp.p > eta}."""
    if estimate_error:
        return _with_error(integrate_indicator, Q, eta, g, n_u, n_phi)
    rule = kink_rule(as_sym3(Q), eta, n_u, n_phi)
    # every node of a kink rule already lies in E_Q
    return _apply(rule, g, lambda r: 1.0)


def pp_traceless(p):
    """p x p - I/3 for an (N, 3) array of unit vectors."""
    return np.einsum("ni,nj->nij", p, p) - np.eye(3) / 3.0


def fourth_moment_map(A, n_u=16, n_phi=32):
    """(1/4 pi) int (Ap.p)(p x p - I/3) dp as a traceless tensor."""
    A = as_sym3(A)
    rule = SphereRule.product(n_u, n_phi)
    p = rule.nodes
    vals = A.quad(p)[:, None, None] * pp_traceless(p)
    return as_sym3(rule.integrate(vals) / (4.0 * np.pi))
