"""Pure numpy versions of the hot kernels.

Both kernels work on a discrete measure given by quadrature weights ``w`` and
a feature matrix ``F`` (one row per node). The tilted measure for a multiplier
vector ``lam`` has weights ``w * exp(F @ lam)``. Exponents are shifted by their
maximum before exponentiation so large multipliers do not overflow.
"""
import numpy as np

ARMIJO = 1e-4


def tilted_moments(F, w, lam, second=True):
    """Return (log_z, mean, raw second moment) of the tilted measure.

    ``log_z`` is log(sum w exp(F lam)); ``mean`` and the second moment are
    normalised by that sum.
    """
    expo = F @ lam
    shift = expo.max()
    e = w * np.exp(expo - shift)
    z = e.sum()
    mean = (e @ F) / z
    m2 = (F.T * e) @ F / z if second else None
    return shift + np.log(z), mean, m2


def _objective(F, w, target, lam):
    expo = F @ lam
    shift = expo.max()
    return lam @ target - shift - np.log(np.sum(w * np.exp(expo - shift)))


def dual_newton(F, w, target, lam0, tol=1e-10, max_iter=200):
    """Maximise lam.target - log sum w exp(F lam) by damped Newton.

    Returns (lam, log_z, grad_norm, iterations, converged).
    """
    lam = np.array(lam0, dtype=float)
    log_z, mean, m2 = tilted_moments(F, w, lam)
    obj = lam @ target - log_z
    grad = target - mean
    gnorm = float(np.sqrt(grad @ grad))
    it = 0
    while gnorm > tol and it < max_iter:
        cov = m2 - np.outer(mean, mean)
        try:
            d = np.linalg.solve(cov, grad)
        except np.linalg.LinAlgError:
            d = grad
        slope = grad @ d
        if not slope > 0.0:
            d, slope = grad, gnorm * gnorm
        t = 1.0
        slack = 1e-14 * (1.0 + abs(obj))
        while True:
            trial = lam + t * d
            obj_t = _objective(F, w, target, trial)
            if obj_t >= obj + ARMIJO * t * slope - slack:
                break
            t *= 0.5
            if t < 1e-16:
                break
        lam = trial
        log_z, mean, m2 = tilted_moments(F, w, lam)
        obj = lam @ target - log_z
        grad = target - mean
        gnorm = float(np.sqrt(grad @ grad))
        it += 1
    return lam, float(log_z), gnorm, it, gnorm <= tol
