"""Critical points of J and of the thermal energy: biaxial search in the
diagonal frame, the uniaxial one-dimensional reduction, branch tracing in
eta, stability classification and saturation diagnostics."""
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from . import kernels
from .dual import ConvergenceError, DomainError, TOL, solve_lambda
from .energy import derivatives, fd_hessian
from .quadrature import DEFAULT_NU, IntervalRule
from .tensor3 import (TracelessSym3, diag_coords, domain_violation, in_domain_of_J,
                      orbit_tangent, uniaxial)

ETA_MAX = 2.0 / 3.0
ETA_OBLATE_MAX = 1.0 / 6.0
ZERO_TOL = 1e-6
STABILITY = ("minimum", "saddle", "maximum", "degenerate")
SHORT = {"minimum": "min", "saddle": "saddle", "maximum": "max", "degenerate": "degenerate"}
BRANCH_KINDS = ("isotropic", "prolate", "oblate", "unstable_near_zero")


# ---------------------------------------------------------------- stability

@dataclass(frozen=True)
class Stability:
    stability: str
    spectrum: np.ndarray          # full 5-D Hessian spectrum, ascending
    reduced: np.ndarray           # spectrum with rotation directions removed
    n_rotational: int


def _grad5(eta, tau, **kw):
    def g(c):
        Q = TracelessSym3(c)
        v = derivatives(solve_lambda(Q, eta, **kw))[0].coords
        return v - c / tau if tau is not None else v
    return g


def verdict(mu, zero_tol=ZERO_TOL):
    mu = np.asarray(mu)
    pos, neg = np.any(mu > zero_tol), np.any(mu < -zero_tol)
    if pos and neg:
        return "saddle"
    if np.any(np.abs(mu) <= zero_tol):
        return "degenerate"
    return "minimum" if pos else "maximum"


def stability_classify(Q, eta, tau=None, h=2e-4, zero_tol=ZERO_TOL, **kw):
    """Classify a critical point from the finite-difference Hessian.

    Directions tangent to the rotation orbit of Q are flat for any
    frame-indifferent energy; they are excluded before the sign pattern of
    the remaining eigenvalues is read off.
    """
    Q = TracelessSym3(Q.coords) if isinstance(Q, TracelessSym3) else TracelessSym3(np.asarray(Q, float))
    g = _grad5(float(eta), tau, **kw)
    # Richardson extrapolation removes the O(h^2) error, which otherwise
    # shows up as spurious curvature along the rotation directions
    H = (4.0 * fd_hessian(g, Q.coords, 0.5 * h) - fd_hessian(g, Q.coords, h)) / 3.0
    mu, V = np.linalg.eigh(H)
    T = orbit_tangent(Q, tol=1e-8)
    if T.shape[0]:
        # orthonormal complement of the orbit tangent
        N = np.linalg.svd(T, full_matrices=True)[2][T.shape[0]:]
        reduced = np.linalg.eigvalsh(N @ H @ N.T)
    else:
        reduced = mu
    return Stability(verdict(reduced, zero_tol), mu, reduced, T.shape[0])


# ---------------------------------------------------------------- EL residuals

def el_residual(state, tau=None):
    """Defects of the Euler-Lagrange system at a solved dual state:
    (|int f - 1|, |Q - <p x p - I/3>|, |Lambda - int f/(Qp.p - eta)(p x p - I/3) - Q/tau|)."""
    r = state.rule
    log_m, mean, _ = state.tilted(r.w * r.s)
    mass = math.exp(log_m - state.log_z)
    q_res = float(np.linalg.norm(diag_coords(*r.q) - mass * mean))
    g, _ = derivatives(state)
    if tau is not None:
        g = g - state.Q / tau
    return abs(mass - 1.0), q_res, g.norm()


# ---------------------------------------------------------------- critical points

@dataclass(frozen=True)
class CriticalPoint:
    Q: TracelessSym3
    Lambda: TracelessSym3
    eta: float
    tau: object
    energy: float
    grad_norm: float
    hessian_spectrum: np.ndarray
    stability: str
    el: tuple = field(default=(0.0, 0.0, 0.0))
    iterations: int = 0

    @property
    def coords(self):
        return self.Q.coords[:2].copy()


def _diag(c):
    out = np.zeros(5)
    out[:2] = c
    return TracelessSym3(out)


def _energy_grad(c, eta, tau):
    Q = _diag(c)
    st = solve_lambda(Q, eta)
    g, _ = derivatives(st)
    e = st.value
    if tau is not None:
        e -= Q.norm2() / (2.0 * tau)
        g = g - Q / tau
    return e, g.coords[:2], st


def _inside(c, eta):
    return in_domain_of_J(_diag(c), eta)


def _jac2(c, eta, tau, h=1e-6):
    J = np.empty((2, 2))
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        J[:, k] = (_energy_grad(c + e, eta, tau)[1] - _energy_grad(c - e, eta, tau)[1]) / (2 * h)
    return 0.5 * (J + J.T)


def _make_point(c, eta, tau, it):
    e, _, st = _energy_grad(c, eta, tau)
    stab = stability_classify(st.Q, eta, tau)
    el = el_residual(st, tau)
    return CriticalPoint(st.Q, st.Lambda, float(eta), tau, float(e), el[2], stab.spectrum,
                         stab.stability, el, it)


def find_critical_biaxial(eta, q_init, tau=None, tol=TOL, max_iter=60):
    """Newton iteration on the gradient in the two diagonal coordinates.

    ``q_init`` holds the first two basis coordinates of a diagonal Q. Steps
    leaving the domain are halved until they are back inside.
    """
    eta = float(eta)
    if tau is not None and not tau > 0:
        raise ValueError("tau must be positive")
    c = np.array(q_init, dtype=float)[:2]
    why = domain_violation(_diag(c), eta)
    if why is not None:
        raise DomainError("domain violation: %s" % why)
    _, g, _ = _energy_grad(c, eta, tau)
    gn = np.linalg.norm(g)
    it = 0
    while gn > tol and it < max_iter:
        Jm = _jac2(c, eta, tau)
        d = -np.linalg.lstsq(Jm, g, rcond=None)[0]
        t = 1.0
        while True:
            trial = c + t * d
            if _inside(trial, eta):
                _, gt, _ = _energy_grad(trial, eta, tau)
                if np.linalg.norm(gt) < (1.0 - 1e-4 * t) * gn or t < 1e-3:
                    break
            t *= 0.5
            if t < 1e-12:
                raise ConvergenceError("biaxial Newton stalled at the domain boundary",
                                       _diag(c))
        c, g, gn = trial, gt, np.linalg.norm(gt)
        it += 1
    if gn > 1e-8:
        raise ConvergenceError("biaxial Newton did not converge (|grad| = %.3e)" % gn, _diag(c))
    return _make_point(c, eta, tau, it)


def _triangle_grid(n):
    """Diagonal coordinates on an n x n grid inside the physical triangle."""
    verts = np.array([diag_coords(2 / 3, -1 / 3, -1 / 3), diag_coords(-1 / 3, 2 / 3, -1 / 3),
                      diag_coords(-1 / 3, -1 / 3, 2 / 3)])
    lo, hi = verts.min(0), verts.max(0)
    xs = np.linspace(lo[0], hi[0], n)
    ys = np.linspace(lo[1], hi[1], n)
    pts = []
    for y in ys:
        for x in xs:
            c = np.array([x, y])
            Q = _diag(c)
            if np.linalg.eigvalsh(Q.matrix)[0] > -1 / 3 + 1e-3:
                pts.append(c)
    return pts


def _descend(c, eta, tau, tol=TOL, max_iter=200):
    """Damped Newton descent on the energy in diagonal coordinates."""
    e, g, _ = _energy_grad(c, eta, tau)
    for _ in range(max_iter):
        gn = np.linalg.norm(g)
        if gn <= tol:
            break
        H = _jac2(c, eta, tau)
        d = -g
        if np.all(np.linalg.eigvalsh(H) > 0):
            d = -np.linalg.solve(H, g)
        slope = float(g @ d)
        t = 1.0
        while True:
            trial = c + t * d
            if _inside(trial, eta):
                et, gt, _ = _energy_grad(trial, eta, tau)
                if et <= e + 1e-4 * t * slope + 1e-14 * (1 + abs(e)):
                    break
            t *= 0.5
            if t < 1e-14:
                return c
        c, e, g = trial, et, gt
    return c


def global_minimize(eta, tau=None, n_grid=15, n_starts=3):
    """Least-energy critical point from a deterministic multistart."""
    eta = float(eta)
    if eta >= ETA_MAX:
        raise DomainError("domain violation: no admissible Q for eta >= 2/3")
    probes = [c for c in _triangle_grid(n_grid) if _inside(c, eta)]
    seeds = []
    if eta < 0:
        seeds.append(np.zeros(2))
        base = 0.3
    else:
        base = math.sqrt(1.5 * eta)
    for S in (min(base + 0.05, 0.99), max(-(base + 0.05), -0.49)):
        c = uniaxial(S).coords[:2]
        if _inside(c, eta):
            seeds.append(c)
    scored = []
    for k, c in enumerate(seeds + probes):
        try:
            scored.append((_energy_grad(c, eta, tau)[0], k, c))
        except (ConvergenceError, DomainError):
            continue
    if not scored:
        raise ConvergenceError("no admissible probe converged")
    scored.sort(key=lambda t: (t[0], t[1]))
    best = None
    for _, _, c in scored[:n_starts]:
        c = _descend(c, eta, tau)
        try:
            cp = find_critical_biaxial(eta, c, tau)
        except ConvergenceError:
            continue
        if best is None or cp.energy < best.energy - 1e-12:
            best = cp
    if best is None:
        raise ConvergenceError("multistart minimisation failed")
    return best


# ---------------------------------------------------------------- uniaxial reduction

@dataclass(frozen=True)
class UniaxialState:
    S: float
    eta: float
    l: float
    log_z: float
    J: float
    x: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)
    s: np.ndarray = field(repr=False)
    iterations: int = 0


def _p2(x):
    return 1.5 * x * x - 0.5


def _check_uniaxial(S, eta):
    if not -0.5 < S < 1.0:
        raise DomainError("domain violation: eigenvalue constraint: v_min(Q) <= -1/3")
    if not (2.0 / 3.0) * S * S > eta:
        raise DomainError("domain violation: |Q|^2 <= eta")


@lru_cache(maxsize=4096)
def _uniaxial_cached(S, eta, n, tol):
    _check_uniaxial(S, eta)
    # even integrand on [-1, 1]: integrate over [0, 1] with weight 2, times 2 pi azimuth
    if S == 0.0:
        r = IntervalRule.gauss(n, 0.0, 1.0)
    else:
        x0sq = 1.0 / 3.0 + eta / S
        x0 = math.sqrt(x0sq) if 0.0 < x0sq < 1.0 else None
        if x0 is None:
            r = IntervalRule.gauss(n, 0.0, 1.0)
        elif S > 0:
            r = IntervalRule.gauss(n, x0, 1.0)
        else:
            r = IntervalRule.gauss(n, 0.0, x0)
    x = r.nodes
    s = np.clip(S * (x * x - 1.0 / 3.0) - eta, 0.0, None)
    w = 4.0 * math.pi * r.weights
    F = np.ascontiguousarray((2.0 / 3.0) * _p2(x)[:, None])
    lam, log_z, gn, it, ok = kernels.dual_newton(F, w * s, np.array([(2.0 / 3.0) * S]),
                                                 np.zeros(1), tol, 200)
    if not ok:
        raise ConvergenceError("uniaxial dual did not converge (|grad| = %.3e)" % gn)
    l = float(lam[0])
    return UniaxialState(S, eta, l, float(log_z), (2.0 / 3.0) * l * S - float(log_z), x, w, s, it)


def uniaxial_solve(S, eta, n=DEFAULT_NU, tol=TOL):
    return _uniaxial_cached(float(S), float(eta), int(n), float(tol))


def uniaxial_j(S, eta, n=DEFAULT_NU):
    """(J, l) for Q = S(e1 x e1 - I/3); the multiplier is Lambda = l (e1 x e1 - I/3)."""
    st = uniaxial_solve(S, eta, n)
    return st.J, st.l


def uniaxial_djds(S, eta, n=DEFAULT_NU):
    """dJ/dS = (2/3) l - int exp((2/3) l P2) (2/3) P2 / Z over the support."""
    st = uniaxial_solve(S, eta, n)
    F = np.ascontiguousarray((2.0 / 3.0) * _p2(st.x)[:, None])
    log_c, mean, _ = kernels.tilted_moments(F, st.w * (st.s > 0), np.array([st.l]), False)
    return (2.0 / 3.0) * st.l - math.exp(log_c - st.log_z) * float(mean[0])


def uniaxial_djds_fd(S, eta, h=1e-6, n=DEFAULT_NU):
    return (uniaxial_j(S + h, eta, n)[0] - uniaxial_j(S - h, eta, n)[0]) / (2.0 * h)


def uniaxial_d2jds2(S, eta, h=1e-5, n=DEFAULT_NU):
    return (uniaxial_djds(S + h, eta, n) - uniaxial_djds(S - h, eta, n)) / (2.0 * h)


def uniaxial_moments(S, eta, n=DEFAULT_NU):
    """(<(p.e)^2>, <(p.e)^4>) under the optimal uniaxial density."""
    st = uniaxial_solve(S, eta, n)
    x = st.x
    F = np.ascontiguousarray(np.column_stack([(2.0 / 3.0) * _p2(x), x * x, x ** 4]))
    _, mean, _ = kernels.tilted_moments(F, st.w * st.s, np.array([st.l, 0.0, 0.0]), False)
    return float(mean[1]), float(mean[2])


def uniaxial_pstar(S, eta, n=DEFAULT_NU):
    """Dimensionless pressure int f / (Qp.p - eta) dp for the uniaxial Q."""
    st = uniaxial_solve(S, eta, n)
    F = np.ascontiguousarray((2.0 / 3.0) * _p2(st.x)[:, None])
    log_c, _, _ = kernels.tilted_moments(F, st.w * (st.s > 0), np.array([st.l]), False)
    return math.exp(log_c - st.log_z)


def _cluster(a, b, n):
    """n interior points of (a, b) clustered towards both ends."""
    k = np.arange(1, n + 1)
    return a + (b - a) * 0.5 * (1.0 - np.cos(np.pi * k / (n + 1)))


def uniaxial_critical_points(eta, a, b, n_scan=120, h=1e-6, extra=(), n=DEFAULT_NU):
    """All critical points of S -> J(S, eta) in (a, b).

    Sign changes of the finite-difference derivative on a clustered grid
    bracket the roots, which are then polished with brentq on the analytic
    derivative. Returns (S, l, J, d2J/dS2) tuples ascending in S.
    """
    eta = float(eta)
    pts, vals = [], []
    grid = np.unique(np.concatenate([_cluster(a, b, n_scan), np.asarray(extra, dtype=float)]))
    for S in grid:
        if S - h <= a or S + h >= b:
            continue
        try:
            vals.append(uniaxial_djds_fd(S, eta, h, n))
            pts.append(S)
        except (DomainError, ConvergenceError):
            continue
    out = []
    for k in range(len(pts) - 1):
        if vals[k] == 0.0 or vals[k] * vals[k + 1] < 0:
            lo, hi = pts[k], pts[k + 1]
            try:
                flo, fhi = uniaxial_djds(lo, eta, n), uniaxial_djds(hi, eta, n)
                if flo == 0.0:
                    S = lo
                elif flo * fhi > 0:
                    continue
                else:
                    S = brentq(uniaxial_djds, lo, hi, args=(eta, n), xtol=1e-15, rtol=1e-15)
                J, l = uniaxial_j(S, eta, n)
                d2 = uniaxial_d2jds2(S, eta, n=n) if a < S - 1e-5 and S + 1e-5 < b else float("nan")
            except (DomainError, ConvergenceError):
                continue
            out.append((float(S), l, J, d2))
    return out


def _stab1(d2, zero_tol=ZERO_TOL):
    if not np.isfinite(d2) or abs(d2) <= zero_tol:
        return "degenerate"
    return "minimum" if d2 > 0 else "maximum"


# ---------------------------------------------------------------- branches

@dataclass(frozen=True)
class BranchRecord:
    eta: float
    S: float
    l: float
    J: float
    stability: str
    d2J: float


@dataclass
class Branch:
    kind: str
    records: list = field(default_factory=list)
    gaps: list = field(default_factory=list)   # (eta, reason)
    meta: dict = field(default_factory=dict)

    def at(self, eta):
        return [r for r in self.records if r.eta == eta]


def branch_interval(kind, eta):
    """Open S-interval searched for the branch at eta."""
    eta = float(eta)
    if kind == "prolate":
        if not 0.0 <= eta < ETA_MAX:
            raise ValueError("prolate branch needs eta in [0, 2/3)")
        return math.sqrt(1.5 * eta), 1.0
    if kind == "oblate":
        if not 0.0 <= eta < ETA_OBLATE_MAX:
            raise ValueError("oblate branch needs eta in [0, 1/6)")
        return -0.5, -math.sqrt(1.5 * eta)
    if kind in ("isotropic", "unstable_near_zero"):
        if not eta < 0:
            raise ValueError("%s branch needs eta < 0" % kind)
        return -0.5, 1.0
    raise ValueError("unknown branch kind %r" % kind)


def _pick(cands, prev):
    mins = [c for c in cands if c[3] > 0]
    pool = mins or cands
    if prev is not None:
        return min(pool, key=lambda c: (abs(c[0] - prev), c[0]))
    return min(pool, key=lambda c: (c[2], c[0]))


def _near_zero_maxima(eta, n=DEFAULT_NU):
    """Local maxima of S -> J nearest to zero on each side, or None."""
    # the maxima approach S = 0 as eta -> 0, so refine geometrically there
    near = np.geomspace(1e-5, 0.3, 60)
    cands = (uniaxial_critical_points(eta, -0.5, 0.0, extra=-near, n=n)
             + uniaxial_critical_points(eta, 0.0, 1.0, extra=near, n=n))
    maxp = [c for c in cands if c[0] > 1e-12 and c[3] < 0]
    maxm = [c for c in cands if c[0] < -1e-12 and c[3] < 0]
    plus = min(maxp, key=lambda c: c[0]) if maxp else None
    minus = max(maxm, key=lambda c: c[0]) if maxm else None
    return minus, plus


def trace_branch(kind, eta_grid, n_scan=120, n=DEFAULT_NU):
    """Uniaxial critical points of the given kind along an eta grid."""
    grid = sorted(float(e) for e in eta_grid)
    for e in grid:
        branch_interval(kind, e)
    br = Branch(kind)
    prev = None
    for eta in grid:
        if kind == "isotropic":
            J, l = uniaxial_j(0.0, eta, n)
            d2 = uniaxial_d2jds2(0.0, eta, n=n)
            br.records.append(BranchRecord(eta, 0.0, l, J, _stab1(d2), d2))
            continue
        if kind == "unstable_near_zero":
            minus, plus = _near_zero_maxima(eta, n)
            missing = [side for side, c in (("negative", minus), ("positive", plus)) if c is None]
            if missing:
                br.gaps.append((eta, "no local maximum on the %s side" % " or ".join(missing)))
            for c in (minus, plus):
                if c is not None:
                    br.records.append(BranchRecord(eta, c[0], c[1], c[2], _stab1(c[3]), c[3]))
            continue
        a, b = branch_interval(kind, eta)
        cands = uniaxial_critical_points(eta, a, b, n_scan, n=n)
        if not cands:
            br.gaps.append((eta, "no sign change of dJ/dS in (%r, %r)" % (a, b)))
            continue
        S, l, J, d2 = _pick(cands, prev)
        prev = S
        br.records.append(BranchRecord(eta, S, l, J, _stab1(d2), d2))
    br.meta.update(n_scan=n_scan, n=n)
    return br


def find_eta0(lo=-1.0 / 3.0, hi=-1e-4, tol=1e-6):
    """Left end of the eta-range where the two near-zero maxima exist,
    located by bisection on existence."""

    def exists(eta):
        m, p = _near_zero_maxima(eta)
        return m is not None and p is not None

    if not exists(hi):
        raise ConvergenceError("near-zero maxima not found at eta = %r" % hi)
    if exists(lo):
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if exists(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def saturation_diagnostics(branch, n=DEFAULT_NU):
    """Per record: (eta, S, <(p.e)^2>, <(p.e)^4>) with e the branch axis."""
    rows = []
    for r in branch.records:
        m2, m4 = uniaxial_moments(r.S, r.eta, n)
        rows.append((r.eta, r.S, m2, m4))
    return rows


def locate_stability_flip(eta, lo=1e-3, hi=1e3, rtol=1e-6):
    """Bisect in log tau for the change of the isotropic verdict of the
    thermal energy at eta < 0; returns tau where the verdict flips."""
    Q = TracelessSym3.zero()

    def stable(tau):
        return stability_classify(Q, eta, tau).stability == "minimum"

    s_lo, s_hi = stable(lo), stable(hi)
    if s_lo == s_hi:
        return math.nan
    while hi / lo - 1.0 > rtol:
        mid = math.sqrt(lo * hi)
        if stable(mid) == s_lo:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)
