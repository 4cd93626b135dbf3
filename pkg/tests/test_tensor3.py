import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from densenematic.tensor3 import (BASIS, TracelessSym3, as_sym3, diag_coords, diag_from_coords,
                                  domain_violation, eig, in_domain_of_J, orbit_tangent,
                                  random_rotation, uniaxial)

coords = arrays(np.float64, 5, elements=st.floats(-1, 1))
E1, E3 = np.array([1.0, 0, 0]), np.array([0, 0, 1.0])


def test_basis_orthonormal_traceless():
    G = np.einsum("aij,bij->ab", BASIS, BASIS)
    assert np.allclose(G, np.eye(5), atol=1e-15)
    assert np.allclose(np.einsum("aii->a", BASIS), 0, atol=1e-15)
    assert np.allclose(BASIS, np.transpose(BASIS, (0, 2, 1)))


@given(coords, coords)
def test_inner_product_matches_frobenius(a, b):
    A, B = TracelessSym3(a), TracelessSym3(b)
    assert A.dot(B) == pytest.approx(np.sum(A.matrix * B.matrix), abs=1e-12)
    assert abs(np.trace((A + B).matrix)) <= 1e-12
    assert abs(np.trace((A * 3.0 - B / 2.0).matrix)) <= 1e-12


def test_from_matrix_removes_trace_and_round_trips():
    m = np.array([[1.0, 2, 0], [2, 0.5, 1], [0, 1, 3]])
    Q = TracelessSym3.from_matrix(m)
    assert abs(np.trace(Q.matrix)) < 1e-14
    assert np.allclose(as_sym3(Q.matrix).coords, Q.coords)


def test_uniaxial_examples():
    Q = uniaxial(1.0, E1)
    assert np.allclose(eig(Q).values, [2 / 3, -1 / 3, -1 / 3], atol=1e-15)
    assert Q.norm2() == pytest.approx(2 / 3, abs=1e-12)
    assert uniaxial(0.0, E1).norm() == 0.0
    # Q-tensor of the uniform density on a cap of height eps = 0.5 around e1
    eps = 0.5
    assert np.allclose(uniaxial(0.375, E1).coords, uniaxial(1 - 1.5 * eps + 0.5 * eps ** 2, E1).coords)
    with pytest.raises(ValueError):
        uniaxial(0.5, (1.0, 1.0, 0.0))


@given(st.floats(-0.5, 1.0), arrays(np.float64, 3, elements=st.floats(-1, 1)))
def test_uniaxial_norm(S, n):
    if np.linalg.norm(n) < 1e-3:
        return
    n = n / np.linalg.norm(n)
    assert uniaxial(S, n).norm2() == pytest.approx(2 / 3 * S * S, abs=1e-12)


def test_eig_examples():
    f = eig(TracelessSym3.zero())
    assert np.all(f.values == 0) and np.array_equal(f.R, np.eye(3))
    assert np.allclose(eig(uniaxial(0.5, E3)).values, [1 / 3, -1 / 6, -1 / 6], atol=1e-15)


@given(coords, st.integers(0, 2 ** 31))
def test_eig_reconstruction_and_rotation_invariance(c, seed):
    Q = TracelessSym3(c)
    f = eig(Q)
    assert np.all(np.diff(f.values) <= 1e-15)
    assert abs(f.values.sum()) <= 1e-10
    assert np.linalg.det(f.R) == pytest.approx(1.0, abs=1e-12)
    assert (f.reconstruct() - Q).norm() <= 1e-10
    R = random_rotation(np.random.default_rng(seed))
    assert np.allclose(eig(Q.rotate(R)).values, f.values, atol=1e-10)


def test_domain_examples():
    assert in_domain_of_J(TracelessSym3.zero(), -0.1)
    assert not in_domain_of_J(TracelessSym3.zero(), 0.0)
    # v_min = -1/3 exactly is excluded
    assert not in_domain_of_J(uniaxial(1.0, E1), 0.6)
    assert domain_violation(uniaxial(1.0, E1), 0.6).startswith("eigenvalue")
    assert domain_violation(TracelessSym3.zero(), 0.1) == "|Q|^2 <= eta"
    assert domain_violation(uniaxial(0.5), 0.1) is None


@given(coords, st.floats(-0.5, 0.6), st.integers(0, 2 ** 31))
def test_domain_rotation_invariant(c, eta, seed):
    Q = TracelessSym3(c * 0.3)
    R = random_rotation(np.random.default_rng(seed))
    a, b = in_domain_of_J(Q, eta), in_domain_of_J(Q.rotate(R), eta)
    # only disagree if the point sits on a boundary to rounding accuracy
    if a != b:
        assert abs(Q.norm2() - eta) < 1e-12 or abs(eig(Q).values[2] + 1 / 3) < 1e-11


def test_diag_coords_round_trip():
    v = np.array([0.4, -0.1, -0.3])
    assert np.allclose(diag_from_coords(diag_coords(*v)), v)
    assert np.allclose(TracelessSym3.diag(*v).coords[:2], diag_coords(*v))


def test_orbit_tangent_dimensions(rng):
    assert orbit_tangent(TracelessSym3.zero()).shape[0] == 0
    assert orbit_tangent(uniaxial(0.4)).shape[0] == 2
    assert orbit_tangent(TracelessSym3.diag(0.4, -0.1, -0.3)).shape[0] == 3
    T = orbit_tangent(TracelessSym3.diag(0.4, -0.1, -0.3))
    assert np.allclose(T @ T.T, np.eye(3), atol=1e-12)
