"""Compare the compiled and numpy kernels on representative dual solves.

    python3 benchmarks/bench_kernels.py [--repeat 20]
"""
import argparse
import time

import numpy as np

from densenematic import kernels
from densenematic.quadrature import kink_rule
from densenematic.tensor3 import TracelessSym3, diag_coords, uniaxial

CASES = [
    ("isotropic, eta=-0.5", TracelessSym3.zero(), -0.5),
    ("prolate S=0.9, eta=0.3", uniaxial(0.9), 0.3),
    ("oblate S=-0.45, eta=0.1", uniaxial(-0.45), 0.1),
    ("biaxial (0.4,-0.1,-0.3), eta=0.05", TracelessSym3.diag(0.4, -0.1, -0.3), 0.05),
    ("near saturation S=0.99, eta=0.6", uniaxial(0.99), 0.6),
]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--nu", type=int, default=64)
    ap.add_argument("--nphi", type=int, default=128)
    args = ap.parse_args()
    py = kernels.get_backend("python")
    try:
        cy = kernels.get_backend("cython")
    except ImportError:
        print("compiled kernels not available; nothing to compare")
        return
    print("default backend: %s" % kernels.BACKEND)
    print("%-36s %7s %12s %12s %8s %10s" % ("case", "nodes", "numpy [ms]", "cython [ms]", "speedup", "|dlam|"))
    for name, Q, eta in CASES:
        rule = kink_rule(Q, eta, args.nu, args.nphi, octant=True)
        F = rule.features("eig")
        w = rule.w * rule.s
        tgt = diag_coords(*rule.q)
        lam0 = np.zeros(2)
        rp = py.dual_newton(F, w, tgt, lam0)
        rc = cy.dual_newton(F, w, tgt, lam0)
        tp = best_of(lambda: py.dual_newton(F, w, tgt, lam0), args.repeat)
        tc = best_of(lambda: cy.dual_newton(F, w, tgt, lam0), args.repeat)
        diff = float(np.max(np.abs(rp[0] - rc[0])))
        print("%-36s %7d %12.3f %12.3f %8.1fx %10.1e" % (name, F.shape[0], 1e3 * tp, 1e3 * tc, tp / tc, diff))

    # the 5-feature moment kernel used by dual_grad / dual_hess
    rule = kink_rule(TracelessSym3.diag(0.4, -0.1, -0.3), 0.05, args.nu, args.nphi)
    F = rule.features("orig")
    w = rule.w * rule.s
    lam = np.array([1.0, -2.0, 0.3, 0.1, -0.2])
    tp = best_of(lambda: py.tilted_moments(F, w, lam), args.repeat)
    tc = best_of(lambda: cy.tilted_moments(F, w, lam), args.repeat)
    print("%-36s %7d %12.3f %12.3f %8.1fx" % ("5-feature moments (full sphere)", F.shape[0], 1e3 * tp, 1e3 * tc, tp / tc))


if __name__ == "__main__":
    main()
