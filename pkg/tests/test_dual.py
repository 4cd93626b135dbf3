import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_q
from densenematic.dual import (ConvergenceError, DomainError, density_eval, dual_grad, dual_hess,
                               dual_objective, moment_residual, solve_lambda)
from densenematic.quadrature import kink_rule, pp_traceless
from densenematic.tensor3 import TracelessSym3, random_rotation, uniaxial

E1 = (1.0, 0.0, 0.0)
Z0 = TracelessSym3.zero()


def in_domain_case(rng, lo=0.01, hi=0.5):
    Q = random_q(rng)
    return Q, Q.norm2() - rng.uniform(lo, hi)


# examples

def test_objective_examples():
    assert dual_objective(Z0, Z0, -2 / 15) == pytest.approx(math.log(15 / (8 * math.pi)), abs=1e-12)
    assert dual_objective(Z0, Z0, -0.5) == pytest.approx(-math.log(2 * math.pi), abs=1e-12)
    with pytest.raises(DomainError):
        dual_objective(Z0, Z0, 0.1)


def test_grad_examples():
    assert dual_grad(Z0, Z0, -0.3).norm() < 1e-13
    assert dual_grad(uniaxial(0.05, E1), Z0, -2 / 15).norm() < 1e-12


def test_hess_isotropic_is_two_fifteenths():
    C = dual_hess(Z0, Z0, -0.4)
    assert np.allclose(C, 2 / 15 * np.eye(5), atol=1e-12)


def test_solve_examples():
    st0 = solve_lambda(Z0, -0.5)
    assert st0.Lambda.norm() < 1e-12
    assert st0.Z == pytest.approx(2 * math.pi, rel=1e-12)
    p = np.array([[0.0, 0.0, 1.0], [0.6, 0.8, 0.0]])
    assert np.allclose(density_eval(st0, p), 1 / (4 * math.pi), rtol=1e-12)

    st1 = solve_lambda(uniaxial(0.05, E1), -2 / 15)
    assert st1.Lambda.norm() < 1e-9
    assert st1.Z == pytest.approx(8 * math.pi / 15, rel=1e-10)
    f = density_eval(st1, np.array([E1]))[0]
    assert f == pytest.approx(15 / (8 * math.pi) * (0.05 * 2 / 3 + 2 / 15), rel=1e-9)


def test_density_vanishes_off_support():
    Q = TracelessSym3.diag(0.4, -0.1, -0.3)
    state = solve_lambda(Q, 0.05)
    # e3 has Qp.p = -0.3 < eta
    assert density_eval(state, np.array([[0.0, 0.0, 1.0]]))[0] == 0.0


def test_out_of_domain_rejected():
    with pytest.raises(DomainError):
        solve_lambda(uniaxial(0.3), 0.2)  # |Q|^2 = 0.06 < 0.2
    with pytest.raises(DomainError):
        solve_lambda(TracelessSym3.diag(0.8, -0.4, -0.4), 0.0)  # eigenvalue below -1/3


def test_nonconvergence_carries_last_iterate():
    Q = TracelessSym3.diag(0.4, -0.1, -0.3)
    with pytest.raises(ConvergenceError) as err:
        solve_lambda(Q, 0.05, lam0=TracelessSym3.diag(30.0, -10.0, -20.0), max_iter=1)
    assert err.value.last is not None
    assert err.value.last.iterations == 1


# invariants

@given(st.integers(0, 2 ** 31))
@settings(max_examples=15)
def test_converged_state_invariants(seed):
    rng = np.random.default_rng(seed)
    Q, eta = in_domain_case(rng)
    s = solve_lambda(Q, eta)
    assert s.converged and s.grad_norm <= 1e-10
    assert moment_residual(s) <= 1e-9
    comm = s.Q.matrix @ s.Lambda.matrix - s.Lambda.matrix @ s.Q.matrix
    assert np.linalg.norm(comm) <= 1e-9
    rule = kink_rule(Q, eta)
    mass = float(rule.w @ density_eval(s, rule.nodes))
    assert mass == pytest.approx(1.0, abs=1e-10)
    Z = float(rule.w @ (rule.s * np.exp(s.Lambda.quad(rule.nodes))))
    assert Z == pytest.approx(s.Z, rel=1e-10)


@given(st.integers(0, 2 ** 31))
@settings(max_examples=10)
def test_frame_equivariance(seed):
    rng = np.random.default_rng(seed)
    Q, eta = in_domain_case(rng)
    R = random_rotation(rng)
    a = solve_lambda(Q, eta).Lambda.rotate(R)
    b = solve_lambda(Q.rotate(R), eta).Lambda
    assert (a - b).norm() <= 1e-9 * max(1.0, a.norm())


@given(st.integers(0, 2 ** 31))
@settings(max_examples=10)
def test_unique_from_two_starts(seed):
    rng = np.random.default_rng(seed)
    Q, eta = in_domain_case(rng)
    a = solve_lambda(Q, eta)
    b = solve_lambda(Q, eta, lam0=TracelessSym3(rng.normal(size=5)))
    assert (a.Lambda - b.Lambda).norm() <= 1e-9 * max(1.0, a.Lambda.norm())


def test_optimum_beats_random_probes(rng):
    Q, eta = in_domain_case(rng)
    s = solve_lambda(Q, eta)
    best = dual_objective(Q, s.Lambda, eta)
    assert best == pytest.approx(s.value, abs=1e-10)
    for _ in range(100):
        lam = s.Lambda + TracelessSym3(rng.normal(size=5) * rng.uniform(0.01, 3.0))
        assert dual_objective(Q, lam, eta) <= best + 1e-12


@given(st.integers(0, 2 ** 31))
@settings(max_examples=10)
def test_grad_and_hess_vs_finite_differences(seed):
    rng = np.random.default_rng(seed)
    Q, eta = in_domain_case(rng)
    lam = TracelessSym3(rng.normal(size=5))
    h = 1e-5
    g = dual_grad(Q, lam, eta).coords
    fd = np.array([(dual_objective(Q, lam + TracelessSym3(h * e), eta)
                    - dual_objective(Q, lam - TracelessSym3(h * e), eta)) / (2 * h) for e in np.eye(5)])
    assert np.linalg.norm(g - fd) <= 1e-6 * max(1.0, np.linalg.norm(g))
    C = dual_hess(Q, lam, eta)
    fdh = np.array([(dual_grad(Q, lam + TracelessSym3(h * e), eta).coords
                     - dual_grad(Q, lam - TracelessSym3(h * e), eta).coords) / (2 * h) for e in np.eye(5)])
    # dual_grad = Q - mean, so its Jacobian is minus the covariance
    assert np.max(np.abs(C + fdh)) <= 1e-5
    assert np.linalg.eigvalsh(C)[0] > 0


def test_objective_concave_along_lines(rng):
    Q, eta = in_domain_case(rng)
    d = TracelessSym3(rng.normal(size=5))
    t = np.linspace(-2, 2, 9)
    v = np.array([dual_objective(Q, d * x, eta) for x in t])
    assert np.all(v[:-2] - 2 * v[1:-1] + v[2:] < 0)


def test_octant_rule_agrees_with_full_rule(rng):
    Q, eta = in_domain_case(rng)
    s = solve_lambda(Q, eta)
    full = kink_rule(Q, eta)
    f = density_eval(s, full.nodes)
    mean = np.einsum("n,nij->ij", full.w * f, pp_traceless(full.nodes))
    assert np.linalg.norm(mean - Q.matrix) <= 1e-9
