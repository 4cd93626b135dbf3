"""A quick invariant suite, run by ``densenematic check``."""
import math

import numpy as np

from . import kernels
from .dual import density_eval, solve_lambda
from .energy import hessian_at_zero, j_deta, j_grad, j_value, singular_potential
from .equilibria import trace_branch
from .quadrature import fourth_moment_map, kink_rule
from .tensor3 import TracelessSym3, random_rotation, uniaxial


def _random_q(rng, scale=0.2):
    while True:
        Q = TracelessSym3(rng.normal(size=5) * scale)
        if np.linalg.eigvalsh(Q.matrix)[0] > -1 / 3 + 0.05:
            return Q


def run_checks(seed=0):
    rng = np.random.default_rng(seed)
    out = []

    def add(name, ok, detail):
        out.append((name, bool(ok), detail))

    errs = []
    for _ in range(5):
        A = TracelessSym3(rng.normal(size=5))
        errs.append((fourth_moment_map(A) - A * (2 / 15)).norm())
    add("fourth moment map = (2/15) A", max(errs) <= 1e-10, "max err %.2e" % max(errs))

    ref = math.log(15 / (8 * math.pi))
    worst = max(abs(j_value(uniaxial(S), -2 / 15) - ref) for S in (0.0, 0.01, 0.05))
    add("flat family at eta = -2/15", worst <= 1e-8, "max |J - ln(15/8pi)| %.2e" % worst)

    h = hessian_at_zero(-1 / 3)
    rel = abs(h.coefficient - 2.7) / 2.7
    add("Hessian of J at 0 (eta = -1/3)", rel <= 1e-3 and h.max_offdiag <= 1e-6,
        "coefficient %.8f, off-diagonal %.1e" % (h.coefficient, h.max_offdiag))

    worst_g = 0.0
    for _ in range(3):
        Q = _random_q(rng)
        eta = Q.norm2() - 0.1
        g = j_grad(Q, eta).coords
        fd = np.array([(j_value(Q + TracelessSym3(e * 1e-5), eta)
                        - j_value(Q - TracelessSym3(e * 1e-5), eta)) / 2e-5 for e in np.eye(5)])
        worst_g = max(worst_g, np.linalg.norm(g - fd) / max(np.linalg.norm(g), 1e-12))
        fde = (j_value(Q, eta + 1e-5) - j_value(Q, eta - 1e-5)) / 2e-5
        worst_g = max(worst_g, abs(j_deta(Q, eta) - fde) / abs(fde))
    add("gradients vs finite differences", worst_g <= 1e-4, "max rel err %.2e" % worst_g)

    worst_r = 0.0
    for _ in range(3):
        Q = _random_q(rng)
        eta = Q.norm2() - 0.2
        R = random_rotation(rng)
        worst_r = max(worst_r, abs(j_value(Q.rotate(R), eta) - j_value(Q, eta)))
    add("frame indifference of J", worst_r <= 1e-9, "max diff %.2e" % worst_r)

    Q = _random_q(rng)
    eta = Q.norm2() - 0.1
    st = solve_lambda(Q, eta)
    rule = kink_rule(Q, eta)
    mass = float(rule.w @ density_eval(st, rule.nodes))
    add("density normalisation", abs(mass - 1) <= 1e-10, "int f - 1 = %.1e" % (mass - 1))

    bad = 0
    for _ in range(5):
        Q = _random_q(rng)
        eta = Q.norm2() - rng.uniform(0.01, 0.5)
        if j_value(Q, eta) < singular_potential(Q) - math.log(Q.norm2() - eta) - 1e-9:
            bad += 1
        if j_deta(Q, eta) < 1 / (Q.norm2() - eta) - 1e-10:
            bad += 1
    add("blow-up and pressure bounds", bad == 0, "%d violations" % bad)

    pro = trace_branch("prolate", [0.5])
    ok = bool(pro.records) and math.sqrt(0.75) < pro.records[0].S < 1
    add("prolate branch interval at eta = 0.5", ok,
        "S = %r" % (pro.records[0].S if pro.records else None))

    F = np.ascontiguousarray(rng.normal(size=(200, 2)))
    w = rng.uniform(0.1, 1.0, 200)
    lam = rng.normal(size=2)
    a = kernels.get_backend("python").tilted_moments(F, w, lam)
    try:
        b = kernels.get_backend("cython").tilted_moments(F, w, lam)
        diff = max(abs(a[0] - b[0]), np.max(np.abs(a[1] - b[1])), np.max(np.abs(a[2] - b[2])))
        add("compiled and numpy kernels agree", diff <= 1e-12, "max diff %.2e" % diff)
    except ImportError:
        add("compiled and numpy kernels agree", True, "compiled kernels not built; skipped")
    return out
