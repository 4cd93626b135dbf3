"""Traceless symmetric 3x3 tensors.

Tensors are stored as five coordinates in an orthonormal basis of the space of
traceless symmetric matrices, so the Frobenius product of two tensors is the
plain dot product of their coordinates. The first two basis elements are
diagonal; a tensor written in its own eigenframe therefore only has its first
two coordinates non-zero.
"""
from dataclasses import dataclass

import numpy as np

_S2 = np.sqrt(2.0)
_S6 = np.sqrt(6.0)

BASIS = np.array([
    np.array([[1, 0, 0], [0, -1, 0], [0, 0, 0]]) / _S2,
    np.array([[1, 0, 0], [0, 1, 0], [0, 0, -2]]) / _S6,
    np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]]) / _S2,
    np.array([[0, 0, 1], [0, 0, 0], [1, 0, 0]]) / _S2,
    np.array([[0, 0, 0], [0, 0, 1], [0, 1, 0]]) / _S2,
])

# v_min(Q) must exceed -1/3 by at least this much to count as admissible.
EIG_MARGIN = 1e-12


class TracelessSym3:
    """A traceless symmetric 3x3 tensor held as 5 orthonormal coordinates."""

    __slots__ = ("coords",)

    def __init__(self, coords):
        c = np.array(coords, dtype=float).reshape(5)
        c.setflags(write=False)
        self.coords = c

    @classmethod
    def from_matrix(cls, m):
        """Project an arbitrary 3x3 matrix onto the traceless symmetric part."""
        m = np.asarray(m, dtype=float)
        return cls(np.einsum("kij,ij->k", BASIS, 0.5 * (m + m.T)))

    @classmethod
    def zero(cls):
        return cls(np.zeros(5))

    @classmethod
    def diag(cls, v1, v2, v3):
        return cls.from_matrix(np.diag([v1, v2, v3]))

    @property
    def matrix(self):
        return np.einsum("k,kij->ij", self.coords, BASIS)

    def dot(self, other):
        return float(self.coords @ as_sym3(other).coords)

    def norm2(self):
        return float(self.coords @ self.coords)

    def norm(self):
        return float(np.sqrt(self.norm2()))

    def rotate(self, R):
        """Return R Q R^T."""
        R = np.asarray(R, dtype=float)
        return TracelessSym3.from_matrix(R @ self.matrix @ R.T)

    def quad(self, p):
        """Evaluate Qp.p for unit vectors p of shape (..., 3)."""
        return np.einsum("...i,ij,...j->...", p, self.matrix, p)

    def __add__(self, other):
        return TracelessSym3(self.coords + as_sym3(other).coords)

    def __sub__(self, other):
        return TracelessSym3(self.coords - as_sym3(other).coords)

    def __neg__(self):
        return TracelessSym3(-self.coords)

    def __mul__(self, s):
        return TracelessSym3(self.coords * float(s))

    __rmul__ = __mul__

    def __truediv__(self, s):
        return TracelessSym3(self.coords / float(s))

    def __repr__(self):
        return "TracelessSym3(%s)" % np.array2string(self.coords, precision=6)


def as_sym3(x):
    """Coerce a TracelessSym3, a 5-vector or a 3x3 matrix to TracelessSym3."""
    if isinstance(x, TracelessSym3):
        return x
    a = np.asarray(x, dtype=float)
    if a.shape == (3, 3):
        return TracelessSym3.from_matrix(a)
    if a.shape == (5,):
        return TracelessSym3(a)
    raise ValueError("cannot interpret array of shape %s as a traceless tensor" % (a.shape,))


def uniaxial(S, n=(1.0, 0.0, 0.0)):
    """S (n x n - I/3) for a unit vector n."""
    n = np.asarray(n, dtype=float)
    if abs(n @ n - 1.0) > 1e-12:
        raise ValueError("director must be a unit vector")
    return TracelessSym3.from_matrix(S * (np.outer(n, n) - np.eye(3) / 3.0))


def diag_coords(v1, v2, v3):
    """Coordinates (first two) of diag(v1, v2, v3); the trace is discarded."""
    return np.array([(v1 - v2) / _S2, (v1 + v2 - 2.0 * v3) / _S6])


def diag_from_coords(c):
    """Eigen-values (v1, v2, v3) of the diagonal tensor with coordinates c."""
    c1, c2 = c
    return np.array([c1 / _S2 + c2 / _S6, -c1 / _S2 + c2 / _S6, -2.0 * c2 / _S6])


@dataclass(frozen=True)
class EigenFrame:
    """Eigenvalues sorted v1 >= v2 >= v3 and a proper rotation R whose columns
    are the matching eigenvectors, so that Q = R diag(v) R^T."""

    values: np.ndarray
    R: np.ndarray

    def reconstruct(self):
        return TracelessSym3.from_matrix(self.R @ np.diag(self.values) @ self.R.T)


def eig(Q):
    Q = as_sym3(Q)
    if not np.any(Q.coords):
        return EigenFrame(np.zeros(3), np.eye(3))
    w, V = np.linalg.eigh(Q.matrix)
    w, V = w[::-1], V[:, ::-1]
    if np.linalg.det(V) < 0:
        V[:, 2] = -V[:, 2]
    # eigh does not enforce an exactly zero trace
    w = w - w.sum() / 3.0
    return EigenFrame(w, V)


def random_rotation(rng):
    """Haar-distributed rotation from a numpy Generator."""
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def v_min(Q):
    return float(eig(Q).values[2])


def in_physical_set(Q):
    """True iff the smallest eigenvalue of Q exceeds -1/3."""
    return v_min(Q) > -1.0 / 3.0 + EIG_MARGIN


def in_domain_of_J(Q, eta):
    """True iff Q is an admissible second moment and |Q|^2 > eta."""
    Q = as_sym3(Q)
    return in_physical_set(Q) and Q.norm2() > eta


def domain_violation(Q, eta):
    """Human readable name of the violated constraint, or None."""
    Q = as_sym3(Q)
    if not in_physical_set(Q):
        return "eigenvalue constraint: v_min(Q) <= -1/3"
    if not Q.norm2() > eta:
        return "|Q|^2 <= eta"
    return None


def skew_generators():
    """Basis of so(3)."""
    G = np.zeros((3, 3, 3))
    for k, (i, j) in enumerate([(1, 2), (2, 0), (0, 1)]):
        G[k, i, j] = -1.0
        G[k, j, i] = 1.0
    return G


def orbit_tangent(Q, tol=1e-10):
    """Orthonormal basis (rows, 5 coords) of the tangent space of the rotation
    orbit of Q, spanned by [W, Q] for skew W."""
    Qm = as_sym3(Q).matrix
    vecs = [TracelessSym3.from_matrix(W @ Qm - Qm @ W).coords for W in skew_generators()]
    A = np.array(vecs)
    u, s, vt = np.linalg.svd(A)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((0, 5))
    rank = int(np.sum(s > tol * max(1.0, s[0])))
    return vt[:rank]
