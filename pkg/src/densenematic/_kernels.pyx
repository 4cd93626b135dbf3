# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels; see _kernels_py for the contract."""
import numpy as np

from libc.math cimport exp, log, sqrt, fabs
from libc.stdlib cimport malloc, free

DEF KMAX = 5
cdef double ARMIJO = 1e-4


cdef double _moments(const double[:, ::1] F, const double[::1] w, double *lam,
                     int k, double *mean, double *m2, bint second, double *buf) noexcept nogil:
    """Fill mean/m2 (normalised) and return log_z; buf holds n exponents."""
    cdef Py_ssize_t n = F.shape[0], i
    cdef int a, b
    cdef double expo, shift = -1e300, e, z = 0.0, fa
    for a in range(k):
        mean[a] = 0.0
        for b in range(k):
            m2[a * k + b] = 0.0
    for i in range(n):
        expo = 0.0
        for a in range(k):
            expo += F[i, a] * lam[a]
        buf[i] = expo
        if expo > shift:
            shift = expo
    for i in range(n):
        e = w[i] * exp(buf[i] - shift)
        z += e
        for a in range(k):
            fa = e * F[i, a]
            mean[a] += fa
            if second:
                for b in range(a + 1):
                    m2[a * k + b] += fa * F[i, b]
    for a in range(k):
        mean[a] /= z
        if second:
            for b in range(a + 1):
                m2[a * k + b] /= z
                m2[b * k + a] = m2[a * k + b]
    return shift + log(z)


cdef int _cholesky_solve(double *A, double *rhs, double *x, int k) noexcept nogil:
    """Solve A x = rhs for symmetric positive definite A (k x k, destroyed)."""
    cdef int i, j, l
    cdef double s
    for j in range(k):
        s = A[j * k + j]
        for l in range(j):
            s -= A[j * k + l] * A[j * k + l]
        if s <= 0.0:
            return -1
        A[j * k + j] = sqrt(s)
        for i in range(j + 1, k):
            s = A[i * k + j]
            for l in range(j):
                s -= A[i * k + l] * A[j * k + l]
            A[i * k + j] = s / A[j * k + j]
    for i in range(k):
        s = rhs[i]
        for l in range(i):
            s -= A[i * k + l] * x[l]
        x[i] = s / A[i * k + i]
    for i in range(k - 1, -1, -1):
        s = x[i]
        for l in range(i + 1, k):
            s -= A[l * k + i] * x[l]
        x[i] = s / A[i * k + i]
    return 0


def tilted_moments(const double[:, ::1] F, const double[::1] w, lam, bint second=True):
    cdef int k = F.shape[1], a
    cdef double clam[KMAX]
    cdef double mean[KMAX]
    cdef double m2[KMAX * KMAX]
    cdef double log_z
    cdef double *buf
    if k > KMAX:
        raise ValueError("at most %d features supported" % KMAX)
    for a in range(k):
        clam[a] = lam[a]
    buf = <double *> malloc(max(F.shape[0], 1) * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    try:
        with nogil:
            log_z = _moments(F, w, clam, k, mean, m2, second, buf)
    finally:
        free(buf)
    out_mean = np.array([mean[a] for a in range(k)])
    out_m2 = np.array([m2[a] for a in range(k * k)]).reshape(k, k) if second else None
    return log_z, out_mean, out_m2


def dual_newton(const double[:, ::1] F, const double[::1] w, target, lam0,
                double tol=1e-10, int max_iter=200):
    cdef int k = F.shape[1], a, b, it = 0, info
    cdef double lam[KMAX]
    cdef double trial[KMAX]
    cdef double tgt[KMAX]
    cdef double mean[KMAX]
    cdef double grad[KMAX]
    cdef double d[KMAX]
    cdef double m2[KMAX * KMAX]
    cdef double cov[KMAX * KMAX]
    cdef double log_z, obj, obj_t, gnorm, slope, t, slack
    cdef double *buf
    if k > KMAX:
        raise ValueError("at most %d features supported" % KMAX)
    for a in range(k):
        lam[a] = lam0[a]
        tgt[a] = target[a]
    buf = <double *> malloc(max(F.shape[0], 1) * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    with nogil:
        log_z = _moments(F, w, lam, k, mean, m2, True, buf)
        obj = -log_z
        gnorm = 0.0
        for a in range(k):
            obj += lam[a] * tgt[a]
            grad[a] = tgt[a] - mean[a]
            gnorm += grad[a] * grad[a]
        gnorm = sqrt(gnorm)
        while gnorm > tol and it < max_iter:
            for a in range(k):
                for b in range(k):
                    cov[a * k + b] = m2[a * k + b] - mean[a] * mean[b]
            info = _cholesky_solve(cov, grad, d, k)
            slope = 0.0
            for a in range(k):
                slope += grad[a] * d[a]
            if info != 0 or not slope > 0.0:
                for a in range(k):
                    d[a] = grad[a]
                slope = gnorm * gnorm
            t = 1.0
            slack = 1e-14 * (1.0 + fabs(obj))
            while True:
                for a in range(k):
                    trial[a] = lam[a] + t * d[a]
                obj_t = -_moments(F, w, trial, k, mean, m2, False, buf)
                for a in range(k):
                    obj_t += trial[a] * tgt[a]
                if obj_t >= obj + ARMIJO * t * slope - slack:
                    break
                t *= 0.5
                if t < 1e-16:
                    break
            for a in range(k):
                lam[a] = trial[a]
            log_z = _moments(F, w, lam, k, mean, m2, True, buf)
            obj = -log_z
            gnorm = 0.0
            for a in range(k):
                obj += lam[a] * tgt[a]
                grad[a] = tgt[a] - mean[a]
                gnorm += grad[a] * grad[a]
            gnorm = sqrt(gnorm)
            it += 1
    free(buf)
    out = np.array([lam[a] for a in range(k)])
    return out, log_z, gnorm, it, gnorm <= tol
