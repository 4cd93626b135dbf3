import csv
import io
import math
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from densenematic.cli import EOS_HEADER, MAP_HEADER, PHASE_HEADER, fmt, grid, main
from densenematic.energy import MaterialParams, tau_critical


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def report(text):
    return dict(line.split(": ", 1) for line in text.strip().splitlines())


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


# helpers

def test_grid_is_exact_decimal():
    assert grid(-0.3, 0.0, 0.1) == [-0.3, -0.2, -0.1, 0.0]
    assert grid(0.1, 0.3, 0.1) == [0.1, 0.2, 0.3]
    assert grid(0.5, 0.5, 0.1) == [0.5]


def test_fmt_round_trips():
    for x in (0.1, 1 / 3, -2.5e-17, math.pi):
        assert float(fmt(x)) == x
    assert fmt(None) == ""
    assert fmt(3) == "3"


# solve

def test_solve_isotropic(capsys):
    code, out, _ = run(capsys, "solve", "--S", "0", "--eta", "-0.5")
    assert code == 0
    r = report(out)
    assert float(r["J"]) == pytest.approx(-math.log(2 * math.pi), abs=1e-12)
    assert all(abs(float(v)) < 1e-12 for v in r["Lambda coords"].split())
    assert r["stability"] == "min"
    assert float(r["P*"]) == pytest.approx(2.0, rel=1e-12)


def test_solve_flat_family(capsys):
    code, out, _ = run(capsys, "solve", "--S", "0.05", "--eta", "-0.1333333333")
    assert code == 0
    r = report(out)
    assert max(abs(float(v)) for v in r["Lambda eigenvalues"].split()) < 1e-8
    assert float(r["J"]) == pytest.approx(math.log(15 / (8 * math.pi)), abs=1e-8)


def test_solve_biaxial_and_thermal(capsys):
    code, out, _ = run(capsys, "solve", "--q1", "0.4", "--q2", "-0.1", "--eta", "0.05", "--tau", "2")
    assert code == 0
    r = report(out)
    assert [float(v) for v in r["Q eigenvalues"].split()] == pytest.approx([0.4, -0.1, -0.3])
    assert float(r["J_tau"]) == pytest.approx(float(r["J"]) - 0.26 / 4)
    assert r["stability"].startswith("n/a")


def test_solve_domain_errors(capsys):
    code, _, err = run(capsys, "solve", "--S", "0", "--eta", "0.1")
    assert code == 2
    assert "domain violation: |Q|^2 <= eta" in err
    code, _, err = run(capsys, "solve", "--S", "-0.6", "--eta", "-0.5")
    assert code == 2
    assert "eigenvalue" in err


@pytest.mark.parametrize("argv", [
    ["solve", "--eta", "-0.5"],
    ["solve", "--S", "0", "--eta", "-0.5", "--nu", "8"],
    ["solve", "--S", "0", "--eta", "-0.5", "--nphi", "30"],
    ["solve", "--S", "0", "--eta", "-0.5", "--tau", "-1"],
    ["phase-diagram", "--eta-min", "0", "--eta-max", "0.7", "--eta-step", "0.1"],
    ["phase-diagram", "--eta-min", "0", "--eta-max", "0.1", "--eta-step", "0"],
    ["phase-diagram", "--eta-min", "0", "--eta-max", "0.1", "--eta-step", "0.1", "--branches", "cubic"],
    ["eos", "--c", "0.5", "--d", "1"],
    ["stability-map", "--eta-min", "-0.5", "--eta-max", "0.1", "--eta-step", "0.1",
     "--tau-min", "1", "--tau-max", "2", "--tau-step", "1"],
])
def test_invalid_input_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert err.startswith("error:")


def test_numerical_failure_exit_1(capsys):
    code, _, err = run(capsys, "solve", "--q1", "0.4", "--q2", "-0.1", "--eta", "0.05", "--tol", "1e-30")
    assert code == 1
    assert "numerical failure" in err


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "densenematic", "solve", "--S", "0", "--eta", "0.1"],
                       capture_output=True, text=True)
    assert p.returncode == 2
    assert "domain violation" in p.stderr


# phase diagram

PD_ARGS = ["phase-diagram", "--eta-min", "-0.2", "--eta-max", "0.6", "--eta-step", "0.1"]


def test_phase_diagram_rows(capsys, tmp_path):
    svg = tmp_path / "pd.svg"
    code, out, _ = run(capsys, *PD_ARGS, "--svg", str(svg))
    assert code == 0
    assert out.splitlines()[0] == ",".join(PHASE_HEADER)
    data = rows(out)
    for r in data:
        if r["reason"]:
            assert r["S"] == ""
            continue
        eta, S = float(r["eta"]), float(r["S"])
        assert r["stability"] in ("min", "saddle", "max", "degenerate")
        assert all(math.isfinite(float(r[k])) for k in ("S", "l", "J", "m2", "pstar"))
        if r["branch"] == "isotropic":
            assert eta < 0 and S == 0.0 and r["stability"] == "min"
        if r["branch"] == "prolate":
            assert math.sqrt(1.5 * eta) < S < 1
        if r["branch"] == "oblate":
            assert -0.5 < S < -math.sqrt(1.5 * eta)
    pro = {round(float(r["eta"]), 12): float(r["S"]) for r in data if r["branch"] == "prolate"}
    assert math.sqrt(0.75) < pro[0.5] < 1
    # bookkeeping: isotropic 2 (eta < 0), prolate 7, oblate 2, near-zero 2 sheets at -0.1 plus a gap at -0.2
    counts = {}
    for r in data:
        counts[r["branch"]] = counts.get(r["branch"], 0) + 1
    assert counts == {"isotropic": 2, "prolate": 7, "oblate": 2, "unstable_near_zero": 3}
    # eta = -0.2 lies below the measured left end of the near-zero branch: gap rows
    gaps = [r for r in data if r["reason"]]
    assert gaps and all(r["branch"] == "unstable_near_zero" and r["eta"] == "-0.2" for r in gaps)

    tree = ET.parse(svg)
    circles = [e for e in tree.iter() if e.tag.endswith("circle")]
    assert len(circles) == sum(1 for r in data if r["S"]) + 4  # data points + legend


def test_phase_diagram_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, *PD_ARGS, "--out", str(a))[0] == 0
    assert run(capsys, *PD_ARGS, "--out", str(b), "--threads", "3")[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("eta_min = 0.2\neta-max = 0.4\neta_step = 0.1\nbranches = prolate\n")
    code, out, _ = run(capsys, "phase-diagram", "--config", str(cfg))
    assert code == 0
    assert [r["eta"] for r in rows(out)] == ["0.2", "0.3", "0.4"]
    code, out, _ = run(capsys, "phase-diagram", "--config", str(cfg), "--eta-max", "0.2")
    assert [r["eta"] for r in rows(out)] == ["0.2"]
    cfg.write_text("[run]\nbogus = 1\n")
    assert run(capsys, "phase-diagram", "--config", str(cfg))[0] == 2


def test_threads_env(capsys, monkeypatch):
    monkeypatch.setenv("DENSENEMATIC_THREADS", "0")
    assert run(capsys, "solve", "--S", "0", "--eta", "-0.5")[0] == 2


# equation of state

def test_eos(capsys):
    code, out, _ = run(capsys, "eos", "--c", "1", "--d", "0.5", "--rho-min", "0.2",
                       "--rho-max", "2.2", "--rho-step", "0.2")
    assert code == 0
    assert out.splitlines()[0] == ",".join(EOS_HEADER)
    data = rows(out)
    m = MaterialParams(c=1.0, d=0.5)
    ok = [r for r in data if not r["reason"]]
    bad = [r for r in data if r["reason"]]
    assert bad and all("saturation" in r["reason"] and float(r["rho"]) >= m.rho_saturation for r in bad)
    P = [float(r["P"]) for r in ok]
    assert all(a < b for a, b in zip(P, P[1:]))
    for r in ok:
        eta, ps = float(r["eta"]), float(r["pstar"])
        assert ps >= float(r["bound_Q"]) - 1e-10 >= float(r["bound_sat"]) - 1e-10
        if r["branch"] == "isotropic":
            assert ps == pytest.approx(1 / -eta, rel=1e-10)


def test_eos_global_branch(capsys):
    code, out, _ = run(capsys, "eos", "--branch", "global", "--rho-min", "0.5",
                       "--rho-max", "1.5", "--rho-step", "0.5")
    assert code == 0
    for r in rows(out):
        assert float(r["pstar"]) >= float(r["bound_sat"])


# stability map

def test_stability_map(capsys):
    code, out, _ = run(capsys, "stability-map", "--eta-min", "-0.5", "--eta-max", "-0.1",
                       "--eta-step", "0.1", "--tau-min", "0.1", "--tau-max", "1.0", "--tau-step", "0.1")
    assert code == 0
    assert out.splitlines()[0] == ",".join(MAP_HEADER)
    data = rows(out)
    assert len(data) == 5 * 10
    for r in data:
        eta, tau = float(r["eta"]), float(r["tau"])
        assert float(r["tau_c"]) == pytest.approx(tau_critical(eta), rel=1e-12)
        # verdict flips where the thermal Hessian (k - 1/tau) changes sign
        flip = float(r["tau_flip"])
        if abs(tau - flip) < 1e-9:
            assert r["stability"] == "degenerate"
        else:
            assert r["stable"] == ("1" if tau > flip else "0")


def test_stability_map_near_asymptote(capsys):
    code, out, _ = run(capsys, "stability-map", "--eta-min", "-0.134", "--eta-max", "-0.134",
                       "--eta-step", "0.1", "--tau-min", "10", "--tau-max", "100", "--tau-step", "10")
    assert code == 0
    assert all(float(r["tau_c"]) > 100 for r in rows(out))


def test_check_command(capsys):
    code, out, _ = run(capsys, "check")
    assert code == 0
    assert out.count("PASS") == len(out.splitlines()) == 9
