# cython: language_level=3
"""Compiled backend for the scalar special-function kernels.

Same algorithms and constants as ``swiptsim._specfun_py``; that module's
docstring is the reference description.  The test suite asserts pointwise
agreement between the two backends, so any change here must land there too.
"""

from libc.math cimport exp, log, sqrt, lgamma, fabs, isfinite, M_PI

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "native"

cdef double TERM_EPS = 1e-17
cdef double LOG_TINY = -745.0

cdef double[7] DIGAMMA_TAIL
DIGAMMA_TAIL[0] = 1.0 / 12.0
DIGAMMA_TAIL[1] = -1.0 / 120.0
DIGAMMA_TAIL[2] = 1.0 / 252.0
DIGAMMA_TAIL[3] = -1.0 / 240.0
DIGAMMA_TAIL[4] = 1.0 / 132.0
DIGAMMA_TAIL[5] = -691.0 / 32760.0
DIGAMMA_TAIL[6] = 1.0 / 12.0

# 96-point Gauss-Legendre rule for the large-argument Marcum quadrature.
_nodes, _weights = np.polynomial.legendre.leggauss(96)
cdef double[::1] GL_NODES = np.ascontiguousarray(_nodes)
cdef double[::1] GL_WEIGHTS = np.ascontiguousarray(_weights)


cdef double _digamma(double x) except? -1e308:
    cdef double acc = 0.0
    cdef double y = x
    cdef double inv2, tail, p
    cdef int i
    if not (x > 0.0 and isfinite(x)):
        raise ValueError(f"digamma requires finite x > 0, got {x!r}")
    while y < 10.0:
        acc -= 1.0 / y
        y += 1.0
    inv2 = 1.0 / (y * y)
    tail = 0.0
    p = inv2
    for i in range(7):
        tail += DIGAMMA_TAIL[i] * p
        p *= inv2
    return acc + log(y) - 0.5 / y - tail


cdef int _reg_gamma_pair(double a, double x, double * lower, double * upper) except -1:
    cdef double ln_pre, ap, term, total, p, q
    cdef double tiny = 1e-300
    cdef double b, c, d, h, an, delt
    cdef int i
    if not (a > 0.0 and isfinite(a)):
        raise ValueError(f"regularized gamma requires finite a > 0, got {a!r}")
    if not (x >= 0.0 and isfinite(x)):
        raise ValueError(f"regularized gamma requires finite x >= 0, got {x!r}")
    if x == 0.0:
        lower[0] = 0.0
        upper[0] = 1.0
        return 0
    ln_pre = a * log(x) - x - lgamma(a)
    if x < a + 1.0:
        ap = a
        term = 1.0 / a
        total = term
        for i in range(10000):
            ap += 1.0
            term *= x / ap
            total += term
            if term < total * TERM_EPS:
                break
        else:
            raise RuntimeError("regularized gamma series failed to converge")
        p = exp(ln_pre) * total if ln_pre > LOG_TINY else 0.0
        lower[0] = p
        upper[0] = 1.0 - p
        return 0
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if fabs(d) < tiny:
            d = tiny
        c = b + an / c
        if fabs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delt = d * c
        h *= delt
        if fabs(delt - 1.0) < 1e-16:
            break
    else:
        raise RuntimeError("regularized gamma continued fraction failed to converge")
    q = exp(ln_pre) * h if ln_pre > LOG_TINY else 0.0
    lower[0] = 1.0 - q
    upper[0] = q
    return 0


cdef double _bessel_series(int n, double x) except? -1e308:
    cdef double half = 0.5 * x
    cdef double hsq = half * half
    cdef double ln_peak, total, term, ln_val
    cdef long ks, k
    ks = <long>(0.5 * (-n + sqrt(<double>n * n + x * x)))
    if ks < 0:
        ks = 0
    ln_peak = (n + 2.0 * ks) * log(half) - lgamma(ks + 1.0) - lgamma(n + ks + 1.0)
    total = 1.0
    term = 1.0
    k = ks
    while k > 0:
        term *= k * (n + k) / hsq
        total += term
        k -= 1
        if term < TERM_EPS * total:
            break
    term = 1.0
    k = ks
    while True:
        term *= hsq / ((k + 1.0) * (n + k + 1.0))
        total += term
        k += 1
        if term < TERM_EPS * total:
            break
        if k > ks + 100000:
            raise RuntimeError("Bessel series failed to converge")
    ln_val = ln_peak + log(total) - x
    return exp(ln_val) if ln_val > LOG_TINY else 0.0


cdef double _bessel_asymptotic(int n, double x):
    cdef double mu = 4.0 * n * n
    cdef double total = 1.0
    cdef double term = 1.0
    cdef double prev = 1e308
    cdef double odd
    cdef int k
    for k in range(1, 60):
        odd = 2.0 * k - 1.0
        term *= -(mu - odd * odd) / (8.0 * k * x)
        if fabs(term) >= prev:
            break
        total += term
        prev = fabs(term)
        if prev < 1e-18:
            break
    return total / sqrt(2.0 * M_PI * x)


cdef double _bessel_i_scaled(int n, double x) except? -1e308:
    if not (x >= 0.0 and isfinite(x)):
        raise ValueError(f"bessel_i_scaled requires finite x >= 0, got {x!r}")
    if x == 0.0:
        return 1.0 if n == 0 else 0.0
    if x >= max(30.0, 2.0 * n * n):
        return _bessel_asymptotic(n, x)
    return _bessel_series(n, x)


cdef double _marcum_integrand(int m, double a, double xi) except? -1e308:
    cdef double diff, expo
    if xi <= 0.0:
        return 0.0
    diff = xi - a
    expo = -0.5 * diff * diff
    if m > 1:
        expo += (m - 1.0) * (log(xi) - log(a))
    if expo < LOG_TINY:
        return 0.0
    return xi * exp(expo) * _bessel_i_scaled(m - 1, a * xi)


cdef double _marcum_panel(int m, double a, double lo, double hi) except? -1e308:
    cdef double mid, rad, total
    cdef Py_ssize_t i
    if hi <= lo:
        return 0.0
    mid = 0.5 * (lo + hi)
    rad = 0.5 * (hi - lo)
    total = 0.0
    for i in range(GL_NODES.shape[0]):
        total += GL_WEIGHTS[i] * _marcum_integrand(m, a, mid + rad * GL_NODES[i])
    return rad * total


cdef double _marcum_quadrature(int m, double a, double b, bint lower) except? -1e308:
    cdef double lo_bell = a - 14.0 if a > 14.0 else 0.0
    cdef double hi_bell = a + 14.0
    cdef double lo, hi, value
    if lower:
        lo = 0.0
        hi = b if b < hi_bell else hi_bell
        if lo_bell > lo:
            lo = lo_bell
        if b < lo_bell:
            lo = b - 14.0 if b > 14.0 else 0.0
            hi = b
    else:
        lo = b if b > lo_bell else lo_bell
        hi = hi_bell
        if b > hi_bell:
            lo = b
            hi = b + 14.0
    if hi <= lo:
        return 0.0
    if hi - lo > 16.0 and lo < a < hi:
        value = _marcum_panel(m, a, lo, a) + _marcum_panel(m, a, a, hi)
    else:
        value = _marcum_panel(m, a, lo, hi)
    if value < 0.0:
        value = 0.0
    elif value > 1.0:
        value = 1.0
    return value


cdef double _marcum_series(int m, double a, double b, bint lower) except? -1e308:
    cdef double u = 0.5 * a * a
    cdef double w = 0.5 * b * b
    cdef long k0 = <long>u if u > 40.0 else 0
    cdef double p_anchor, lo_tail, up_tail, g_anchor, s_anchor, ln_delta, delta_anchor
    cdef double acc, p, g, delta, s, gn, term, scratch
    cdef long k, max_iter
    if k0 == 0:
        p_anchor = exp(-u)
    else:
        p_anchor = exp(k0 * log(u) - u - lgamma(k0 + 1.0))
    _reg_gamma_pair(m + k0, w, &lo_tail, &up_tail)
    g_anchor = lo_tail if lower else up_tail
    s_anchor = <double>(m + k0)
    ln_delta = s_anchor * log(w) - w - lgamma(s_anchor + 1.0)
    delta_anchor = exp(ln_delta) if ln_delta > LOG_TINY else 0.0

    acc = p_anchor * g_anchor
    max_iter = k0 + <long>(20.0 * sqrt(u + 40.0)) + 400

    p = p_anchor
    g = g_anchor
    delta = delta_anchor
    s = s_anchor
    k = k0
    while k < max_iter:
        if lower:
            gn = g - delta
            if gn < 0.1 * g:
                _reg_gamma_pair(s + 1.0, w, &gn, &scratch)
        else:
            gn = g + delta
        delta *= w / (s + 1.0)
        p *= u / (k + 1.0)
        s += 1.0
        k += 1
        g = gn
        term = p * g
        acc += term
        if lower:
            if (term < TERM_EPS * acc and k > u) or g == 0.0:
                break
        else:
            # underflow clauses cover sums that are identically zero at
            # double precision (w so large every tail and increment vanishes)
            if k > u and (
                p == 0.0
                or (g == 0.0 and delta == 0.0)
                or p * u < TERM_EPS * acc * (k + 2.0 - u)
            ):
                break
    else:
        raise RuntimeError("Marcum Q series failed to converge (upward)")

    p = p_anchor
    g = g_anchor
    delta = delta_anchor
    s = s_anchor
    k = k0
    while k > 0:
        delta *= s / w
        if lower:
            gn = g + delta
        else:
            gn = g - delta
            if gn < 0.1 * g:
                _reg_gamma_pair(s - 1.0, w, &scratch, &gn)
        p *= k / u
        s -= 1.0
        k -= 1
        g = gn
        term = p * g
        acc += term
        if lower:
            if p * (k + 1.0) < TERM_EPS * acc:
                break
        else:
            if term < TERM_EPS * acc:
                break
    if acc < 0.0:
        acc = 0.0
    elif acc > 1.0:
        acc = 1.0
    return acc


cdef int _marcum_order(object m) except -1:
    cdef long order = int(m)
    if order != m or order < 1:
        raise ValueError(f"Marcum Q order must be a positive integer, got {m!r}")
    return <int>order


cdef double _marcum_q(int m, double a, double b) except? -1e308:
    cdef double lo_tail, up_tail
    if not (a >= 0.0 and isfinite(a)):
        raise ValueError(f"Marcum Q requires finite a >= 0, got {a!r}")
    if not (b >= 0.0 and isfinite(b)):
        raise ValueError(f"Marcum Q requires finite b >= 0, got {b!r}")
    if b == 0.0:
        return 1.0
    if a == 0.0:
        _reg_gamma_pair(<double>m, 0.5 * b * b, &lo_tail, &up_tail)
        return up_tail
    if a * b > 30.0:
        return _marcum_quadrature(m, a, b, False)
    if 0.5 * a * a > 40.0:
        _reg_gamma_pair(<double>m, 0.5 * b * b, &lo_tail, &up_tail)
        if lo_tail < TERM_EPS:
            return 1.0
    return _marcum_series(m, a, b, False)


cdef double _marcum_q_complement(int m, double a, double b) except? -1e308:
    cdef double lo_tail, up_tail
    if not (a >= 0.0 and isfinite(a)):
        raise ValueError(f"Marcum Q requires finite a >= 0, got {a!r}")
    if not (b >= 0.0 and isfinite(b)):
        raise ValueError(f"Marcum Q requires finite b >= 0, got {b!r}")
    if b == 0.0:
        return 0.0
    if a == 0.0:
        _reg_gamma_pair(<double>m, 0.5 * b * b, &lo_tail, &up_tail)
        return lo_tail
    if a * b > 30.0:
        return _marcum_quadrature(m, a, b, True)
    return _marcum_series(m, a, b, True)


# ---------------------------------------------------------------------------
# Python-visible wrappers
# ---------------------------------------------------------------------------

def ln_gamma(double x):
    """Natural log of the gamma function for x > 0 (libm lgamma)."""
    if not (x > 0.0 and isfinite(x)):
        raise ValueError(f"ln_gamma requires finite x > 0, got {x!r}")
    return lgamma(x)


def digamma(double x):
    """Logarithmic derivative of the gamma function for x > 0."""
    return _digamma(x)


def reg_gamma_lower(double a, double x):
    """Regularized lower incomplete gamma P(a, x)."""
    cdef double lo, up
    _reg_gamma_pair(a, x, &lo, &up)
    return lo


def reg_gamma_upper(double a, double x):
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    cdef double lo, up
    _reg_gamma_pair(a, x, &lo, &up)
    return up


def bessel_i_scaled(n, double x):
    """Exponentially scaled modified Bessel function exp(-x) I_n(x)."""
    cdef long order = int(n)
    if order != n or order < 0:
        raise ValueError(f"Bessel order must be a nonnegative integer, got {n!r}")
    return _bessel_i_scaled(<int>order, x)


def bessel_i(n, double x):
    """Unscaled I_n(x); raises OverflowError beyond the double range."""
    cdef double scaled = bessel_i_scaled(n, x)
    cdef double ln_val
    if scaled == 0.0:
        return 0.0
    ln_val = x + log(scaled)
    if ln_val > 709.782712893384:
        raise OverflowError(f"bessel_i({n}, {x!r}) exceeds double range")
    return exp(ln_val)


def marcum_q(m, double a, double b):
    """Generalized Marcum Q function Q_m(a, b) for integer order m >= 1."""
    return _marcum_q(_marcum_order(m), a, b)


def marcum_q_complement(m, double a, double b):
    """Lower tail 1 - Q_m(a, b), computed without cancellation."""
    return _marcum_q_complement(_marcum_order(m), a, b)


def reg_gamma_lower_many(double a, x):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] flat = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(flat)
    cdef double lo, up
    cdef Py_ssize_t i
    for i in range(flat.shape[0]):
        _reg_gamma_pair(a, flat[i], &lo, &up)
        out[i] = lo
    return out.reshape(np.shape(x))


def reg_gamma_upper_many(double a, x):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] flat = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(flat)
    cdef double lo, up
    cdef Py_ssize_t i
    for i in range(flat.shape[0]):
        _reg_gamma_pair(a, flat[i], &lo, &up)
        out[i] = up
    return out.reshape(np.shape(x))


def bessel_i_scaled_many(n, x):
    cdef long order = int(n)
    if order != n or order < 0:
        raise ValueError(f"Bessel order must be a nonnegative integer, got {n!r}")
    cdef cnp.ndarray[cnp.float64_t, ndim=1] flat = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(flat)
    cdef Py_ssize_t i
    for i in range(flat.shape[0]):
        out[i] = _bessel_i_scaled(<int>order, flat[i])
    return out.reshape(np.shape(x))


def marcum_q_many(m, double a, b):
    cdef int order = _marcum_order(m)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] flat = np.ascontiguousarray(b, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(flat)
    cdef Py_ssize_t i
    for i in range(flat.shape[0]):
        out[i] = _marcum_q(order, a, flat[i])
    return out.reshape(np.shape(b))


def marcum_q_complement_many(m, double a, b):
    cdef int order = _marcum_order(m)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] flat = np.ascontiguousarray(b, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(flat)
    cdef Py_ssize_t i
    for i in range(flat.shape[0]):
        out[i] = _marcum_q_complement(order, a, flat[i])
    return out.reshape(np.shape(b))
