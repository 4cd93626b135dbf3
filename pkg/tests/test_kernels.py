import numpy as np
import pytest
from hypothesis import given, strategies as st

from densenematic import _kernels_py, kernels
from densenematic.quadrature import kink_rule
from densenematic.tensor3 import diag_coords, uniaxial

try:
    from densenematic import _kernels as compiled
except ImportError:  # pragma: no cover
    compiled = None

needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled kernels not built")


def test_backend_selection():
    assert kernels.BACKEND in ("python", "cython")
    assert kernels.get_backend("python") is _kernels_py
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


@needs_compiled
@given(st.integers(0, 2 ** 31), st.integers(1, 5))
def test_tilted_moments_agree(seed, k):
    rng = np.random.default_rng(seed)
    F = np.ascontiguousarray(rng.normal(size=(300, k)))
    w = rng.uniform(0.01, 1.0, 300)
    lam = rng.normal(size=k) * 3
    a = _kernels_py.tilted_moments(F, w, lam)
    b = compiled.tilted_moments(F, w, lam)
    assert a[0] == pytest.approx(b[0], rel=1e-13, abs=1e-13)
    assert np.allclose(a[1], b[1], rtol=1e-12, atol=1e-13)
    assert np.allclose(a[2], b[2], rtol=1e-12, atol=1e-13)


@needs_compiled
@pytest.mark.parametrize("S,eta", [(0.9, 0.3), (-0.45, 0.1), (0.3, -0.2), (0.99, 0.6)])
def test_dual_newton_agree(S, eta):
    r = kink_rule(uniaxial(S), eta, octant=True)
    F, w, t = r.features("eig"), r.w * r.s, diag_coords(*r.q)
    a = _kernels_py.dual_newton(F, w, t, np.zeros(2))
    b = compiled.dual_newton(F, w, t, np.zeros(2))
    assert a[4] and b[4]
    assert np.allclose(a[0], b[0], atol=1e-9)
    assert a[1] == pytest.approx(b[1], rel=1e-12)


def test_overflow_safe():
    F = np.ascontiguousarray(np.array([[1.0], [0.5], [-1.0]]))
    w = np.ones(3)
    log_z, mean, _ = _kernels_py.tilted_moments(F, w, np.array([2000.0]))
    assert np.isfinite(log_z) and mean[0] == pytest.approx(1.0)
    if compiled is not None:
        log_z2, mean2, _ = compiled.tilted_moments(F, w, np.array([2000.0]))
        assert log_z2 == pytest.approx(log_z)
