"""Command-line front end.

    densenematic solve --S 0.5 --eta 0.1
    densenematic phase-diagram --eta-min -0.3 --eta-max 0.65 --eta-step 0.05 --out pd.csv --svg pd.svg
    densenematic eos --c 1 --d 0.5 --rho-min 0.1 --rho-max 1.9 --rho-step 0.1
    densenematic stability-map --eta-min -1 --eta-max -0.05 --eta-step 0.05 --tau-min 0.1 --tau-max 2 --tau-step 0.1
    densenematic check

Exit codes: 0 success, 1 numerical failure, 2 invalid input.
"""
import argparse
import configparser
import csv
import io
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from decimal import Decimal

import numpy as np

from . import equilibria as eq
from .dual import ConvergenceError, DomainError, solve_lambda
from .energy import (MaterialParams, SaturationError, derivatives, eos_pressure, tau_critical,
                     tau_flip)
from .svg import phase_svg
from .tensor3 import TracelessSym3, uniaxial

MIN_NU, MIN_NPHI = 16, 32


class InputError(ValueError):
    pass


# name -> (type, default); shared between flags and config files
OPTIONS = {
    "eta": (float, None), "eta_min": (float, None), "eta_max": (float, None),
    "eta_step": (float, None), "tau": (float, None), "tau_min": (float, None),
    "tau_max": (float, None), "tau_step": (float, None), "S": (float, None),
    "q1": (float, None), "q2": (float, None), "nu": (int, 64), "nphi": (int, 128),
    "tol": (float, 1e-10), "out": (str, None), "svg": (str, None), "threads": (int, None),
    "branches": (str, "isotropic,prolate,oblate,unstable_near_zero"), "n_scan": (int, 120),
    "c": (float, 1.0), "d": (float, 0.5), "kT": (float, 1.0), "rho_min": (float, 0.1),
    "rho_max": (float, 1.9), "rho_step": (float, 0.1), "branch": (str, "auto"),
}


def fmt(x):
    """Shortest round-trip text for floats."""
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def grid(lo, hi, step, name="eta"):
    if lo is None or hi is None or step is None:
        raise InputError("%s grid needs --%s-min, --%s-max and --%s-step" % ((name,) * 4))
    if not step > 0:
        raise InputError("--%s-step must be positive" % name)
    if hi < lo:
        raise InputError("--%s-max must not be below --%s-min" % (name, name))
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    # decimal arithmetic keeps 0.1 + 2 * 0.1 at 0.3 and lo itself exact
    a, h = Decimal(repr(float(lo))), Decimal(repr(float(step)))
    return [float(a + k * h) for k in range(n)]


def _add_common(p):
    p.add_argument("--config", help="INI-style key = value file; flags override it")
    p.add_argument("--nu", type=int, help="Gauss-Legendre nodes per polar panel (>= 16, even)")
    p.add_argument("--nphi", type=int, help="azimuthal nodes (>= 32, multiple of 4)")
    p.add_argument("--tol", type=float, help="dual gradient tolerance")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--threads", type=int, help="worker threads (env DENSENEMATIC_THREADS)")


def build_parser():
    ap = argparse.ArgumentParser(prog="densenematic", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve the dual problem and report J, Lambda, residuals")
    _add_common(p)
    p.add_argument("--S", type=float, help="uniaxial order parameter (director e1)")
    p.add_argument("--q1", type=float, help="largest eigenvalue of a diagonal Q")
    p.add_argument("--q2", type=float, help="middle eigenvalue of a diagonal Q")
    p.add_argument("--eta", type=float)
    p.add_argument("--tau", type=float, help="temperature of the thermal model")

    p = sub.add_parser("phase-diagram", help="uniaxial branches over an eta grid as CSV")
    _add_common(p)
    for k in ("eta-min", "eta-max", "eta-step"):
        p.add_argument("--" + k, type=float)
    p.add_argument("--branches", help="comma-separated subset of %s" % ",".join(eq.BRANCH_KINDS))
    p.add_argument("--n-scan", type=int, help="scan points per branch interval")
    p.add_argument("--svg", help="also write an SVG figure")

    p = sub.add_parser("eos", help="equation of state over a density grid as CSV")
    _add_common(p)
    for k in ("c", "d", "kT", "rho-min", "rho-max", "rho-step"):
        p.add_argument("--" + k, type=float)
    p.add_argument("--branch", choices=("auto", "isotropic", "prolate", "global"),
                   help="which Q to use at each density (auto: isotropic below eta = 0, prolate above)")

    p = sub.add_parser("stability-map", help="isotropic stability of the thermal model as CSV")
    _add_common(p)
    for k in ("eta-min", "eta-max", "eta-step", "tau-min", "tau-max", "tau-step"):
        p.add_argument("--" + k, type=float)

    p = sub.add_parser("check", help="run the invariant suite")
    _add_common(p)
    return ap


def load_config(path):
    text = open(path).read()
    cp = configparser.ConfigParser()
    cp.optionxform = str
    if not text.lstrip().startswith("["):
        text = "[run]\n" + text
    cp.read_string(text)
    out = {}
    for sec in cp.sections():
        for k, v in cp.items(sec):
            key = k.strip().replace("-", "_")
            if key not in OPTIONS:
                raise InputError("unknown config key %r" % k)
            out[key] = OPTIONS[key][0](v)
    return out


def resolve(args):
    """Merge flags over config over defaults into a plain dict."""
    cfg = load_config(args.config) if getattr(args, "config", None) else {}
    conf = {}
    for key, (typ, default) in OPTIONS.items():
        v = getattr(args, key, None)
        if v is None:
            v = cfg.get(key, default)
        conf[key] = v
    if conf["threads"] is None:
        conf["threads"] = int(os.environ.get("DENSENEMATIC_THREADS", "1") or 1)
    if conf["threads"] < 1:
        raise InputError("--threads must be at least 1")
    if conf["nu"] < MIN_NU or conf["nu"] % 2:
        raise InputError("--nu must be an even number >= %d" % MIN_NU)
    if conf["nphi"] < MIN_NPHI or conf["nphi"] % 4:
        raise InputError("--nphi must be a multiple of 4 and >= %d" % MIN_NPHI)
    if not conf["tol"] > 0:
        raise InputError("--tol must be positive")
    return conf


def _emit(text, path):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    return buf.getvalue()


# ---------------------------------------------------------------- solve

def cmd_solve(conf):
    eta = conf["eta"]
    if eta is None:
        raise InputError("solve needs --eta")
    if conf["S"] is not None:
        Q = uniaxial(conf["S"])
    elif conf["q1"] is not None and conf["q2"] is not None:
        q1, q2 = conf["q1"], conf["q2"]
        Q = TracelessSym3.diag(q1, q2, -q1 - q2)
    else:
        raise InputError("solve needs --S or both --q1 and --q2")
    tau = conf["tau"]
    if tau is not None and not tau > 0:
        raise InputError("--tau must be positive")
    st = solve_lambda(Q, eta, tol=conf["tol"], n_u=conf["nu"], n_phi=conf["nphi"])
    grad, pstar = derivatives(st)
    el = eq.el_residual(st, tau)
    lines = [
        ("eta", eta),
        ("Q eigenvalues", " ".join(fmt(v) for v in st.rule.q)),
        ("Lambda eigenvalues", " ".join(fmt(v) for v in np.linalg.eigvalsh(st.Lambda.matrix)[::-1])),
        ("Lambda coords", " ".join(fmt(v) for v in st.Lambda.coords)),
        ("Z", st.Z), ("J", st.value),
    ]
    if tau is not None:
        lines.insert(1, ("tau", tau))
        lines.append(("J_tau", st.value - Q.norm2() / (2 * tau)))
    lines += [("dual grad norm", st.grad_norm), ("dual iterations", st.iterations),
              ("dJ/dQ norm", el[2]),
              ("EL residuals", " ".join(fmt(v) for v in el)), ("P*", pstar)]
    if el[2] <= 1e-8:
        stab = eq.stability_classify(Q, eta, tau)
        lines.append(("stability", eq.SHORT[stab.stability]))
        lines.append(("hessian spectrum", " ".join(fmt(v) for v in stab.spectrum)))
    else:
        lines.append(("stability", "n/a (not a critical point)"))
    text = "".join("%s: %s\n" % (k, fmt(v)) for k, v in lines)
    _emit(text, conf["out"])
    return 0


# ---------------------------------------------------------------- phase diagram

PHASE_HEADER = ["eta", "branch", "S", "l", "J", "stability", "m2", "pstar", "reason"]


def _branch_grid(kind, etas):
    if kind in ("isotropic", "unstable_near_zero"):
        return [e for e in etas if e < 0]
    if kind == "prolate":
        return [e for e in etas if 0 <= e < eq.ETA_MAX]
    return [e for e in etas if 0 <= e < eq.ETA_OBLATE_MAX]


def _trace_rows(kind, etas, conf):
    if not etas:
        return []
    br = eq.trace_branch(kind, etas, n_scan=conf["n_scan"], n=conf["nu"])
    rows = []
    for r in br.records:
        m2, _ = eq.uniaxial_moments(r.S, r.eta, conf["nu"])
        ps = eq.uniaxial_pstar(r.S, r.eta, conf["nu"])
        rows.append(dict(eta=r.eta, branch=kind, S=r.S, l=r.l, J=r.J,
                         stability=eq.SHORT[r.stability], m2=m2, pstar=ps, reason=""))
    for eta, why in br.gaps:
        rows.append(dict(eta=eta, branch=kind, S=None, l=None, J=None, stability="",
                         m2=None, pstar=None, reason=why))
    return rows


def phase_rows(conf):
    etas = grid(conf["eta_min"], conf["eta_max"], conf["eta_step"])
    if etas[-1] >= eq.ETA_MAX:
        raise InputError("eta_max must be below 2/3")
    kinds = [k.strip() for k in conf["branches"].split(",") if k.strip()]
    for k in kinds:
        if k not in eq.BRANCH_KINDS:
            raise InputError("unknown branch %r" % k)
    with ThreadPoolExecutor(max_workers=conf["threads"]) as pool:
        parts = list(pool.map(lambda k: _trace_rows(k, _branch_grid(k, etas), conf), kinds))
    order = {k: i for i, k in enumerate(eq.BRANCH_KINDS)}
    rows = [r for part in parts for r in part]
    rows.sort(key=lambda r: (r["eta"], order[r["branch"]], r["S"] if r["S"] is not None else -9.0))
    return etas, rows


def cmd_phase_diagram(conf):
    etas, rows = phase_rows(conf)
    text = _csv(PHASE_HEADER, [[r[k] for k in PHASE_HEADER] for r in rows])
    _emit(text, conf["out"])
    if conf["svg"]:
        with open(conf["svg"], "w") as fh:
            fh.write(phase_svg(rows, (etas[0], etas[-1])))
    return 0


# ---------------------------------------------------------------- equation of state

EOS_HEADER = ["rho", "eta", "branch", "S", "pstar", "P", "bound_Q", "bound_sat", "reason"]


def _eos_row(params, rho, mode, conf):
    rho_s = params.rho_saturation
    if rho >= rho_s:
        return [rho, None, mode, None, None, None, None, None,
                "saturation limit: rho >= rho_s = %r" % rho_s]
    eta = params.eta(rho)
    kind = mode
    if mode == "auto":
        kind = "isotropic" if eta < 0 else "prolate"
    if kind == "isotropic":
        if not eta < 0:
            return [rho, eta, kind, None, None, None, None, None, "isotropic state needs eta < 0"]
        Q, S = TracelessSym3.zero(), 0.0
    elif kind == "prolate":
        if eta < 0:
            return [rho, eta, kind, None, None, None, None, None, "prolate branch traced for eta >= 0"]
        br = eq.trace_branch("prolate", [eta], n_scan=conf["n_scan"], n=conf["nu"])
        if not br.records:
            return [rho, eta, kind, None, None, None, None, None, br.gaps[0][1]]
        S = br.records[0].S
        Q = uniaxial(S)
    else:
        cp = eq.global_minimize(eta)
        Q = cp.Q
        v = np.linalg.eigvalsh(Q.matrix)
        # order parameter of the dominant axis, exact for uniaxial Q
        S = 1.5 * (v[-1] if abs(v[-1]) >= abs(v[0]) else v[0])
    kw = dict(n_u=conf["nu"], n_phi=conf["nphi"], tol=conf["tol"])
    st = solve_lambda(Q, eta, **kw)
    pstar = derivatives(st)[1]
    P = eos_pressure(params, rho, Q, **kw)
    return [rho, eta, kind, S, pstar, P, 1.0 / (Q.norm2() - eta), 1.0 / (2.0 / 3.0 - eta), ""]


def cmd_eos(conf):
    try:
        params = MaterialParams(c=conf["c"], d=conf["d"], kT=conf["kT"])
    except ValueError as exc:
        raise InputError(str(exc))
    rhos = grid(conf["rho_min"], conf["rho_max"], conf["rho_step"], "rho")
    if rhos[0] <= 0:
        raise InputError("densities must be positive")
    with ThreadPoolExecutor(max_workers=conf["threads"]) as pool:
        rows = list(pool.map(lambda r: _eos_row(params, r, conf["branch"], conf), rhos))
    _emit(_csv(EOS_HEADER, rows), conf["out"])
    return 0


# ---------------------------------------------------------------- stability map

MAP_HEADER = ["eta", "tau", "stability", "stable", "tau_c", "tau_flip"]


def _map_rows(eta, taus):
    # Hessian of J at 0 once per eta; the thermal term only shifts it by -1/tau
    base = eq.stability_classify(TracelessSym3.zero(), eta).reduced
    tc = tau_critical(eta)
    tf = tau_flip(eta)
    rows = []
    for tau in taus:
        v = eq.verdict(base - 1.0 / tau)
        rows.append([eta, tau, eq.SHORT[v], int(v == "minimum"), tc, tf])
    return rows


def cmd_stability_map(conf):
    etas = grid(conf["eta_min"], conf["eta_max"], conf["eta_step"])
    if etas[-1] >= 0:
        raise InputError("stability map needs eta < 0")
    taus = grid(conf["tau_min"], conf["tau_max"], conf["tau_step"], "tau")
    if taus[0] <= 0:
        raise InputError("tau must be positive")
    with ThreadPoolExecutor(max_workers=conf["threads"]) as pool:
        parts = list(pool.map(lambda e: _map_rows(e, taus), etas))
    _emit(_csv(MAP_HEADER, [r for p in parts for r in p]), conf["out"])
    return 0


# ---------------------------------------------------------------- check

def cmd_check(conf):
    from .checks import run_checks
    results = run_checks()
    lines = ["%s  %-34s %s\n" % ("PASS" if ok else "FAIL", name, detail) for name, ok, detail in results]
    _emit("".join(lines), conf["out"])
    return 0 if all(ok for _, ok, _ in results) else 1


COMMANDS = {"solve": cmd_solve, "phase-diagram": cmd_phase_diagram, "eos": cmd_eos,
            "stability-map": cmd_stability_map, "check": cmd_check}


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    # argparse keeps dashes as underscores except for these names
    for k in ("rho_min", "rho_max", "rho_step", "tau_min", "tau_max", "tau_step",
              "eta_min", "eta_max", "eta_step", "n_scan"):
        if not hasattr(args, k):
            setattr(args, k, None)
    try:
        conf = resolve(args)
        return COMMANDS[args.command](conf)
    except (InputError, DomainError, SaturationError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return 1
    except (OSError, configparser.Error, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
