# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops.  Every function here has a numpy twin in _pykernels."""

import numpy as np

from libc.math cimport pow, log1p, expm1, cos, floor, fabs, M_PI

ctypedef long long i64
ctypedef unsigned int u32


cdef inline bint _pow_le(i64 r, int k, i64 n) noexcept nogil:
    """r**k <= n, without overflow (r >= 1, n >= 0)."""
    cdef i64 acc = 1
    cdef int i
    for i in range(k):
        if acc > n // r:
            return 0
        acc *= r
    return 1


cdef inline i64 _ipow(i64 r, int k) noexcept nogil:
    cdef i64 acc = 1
    cdef int i
    for i in range(k):
        acc *= r
    return acc


cdef inline i64 _iroot(i64 n, int k) noexcept nogil:
    """floor(n ** (1/k)) for 0 <= n < 2**62."""
    if n <= 0:
        return 0
    if k == 1:
        return n
    cdef i64 r = <i64>pow(<double>n, 1.0 / k)
    if r < 1:
        r = 1
    while r > 1 and not _pow_le(r, k, n):
        r -= 1
    while _pow_le(r + 1, k, n):
        r += 1
    return r


cdef i64 _hyperbola(int a, int b, i64 x) noexcept nogil:
    cdef i64 n0 = _iroot(x, a + b)
    cdef i64 total = 0
    cdef i64 m
    for m in range(1, n0 + 1):
        total += _iroot(x // _ipow(m, b), a)
        total += _iroot(x // _ipow(m, a), b)
    return total - n0 * n0


def iroot(i64 n, int k):
    return _iroot(n, k)


def hyperbola_counts(int a, int b, i64[::1] xs):
    """D(x) for integer x by the split at x^(1/(a+b)); integer pairs only."""
    cdef Py_ssize_t i, n = xs.shape[0]
    out = np.empty(n, dtype=np.int64)
    cdef i64[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _hyperbola(a, b, xs[i])
    return out


def naive_count(int a, int b, i64 x):
    """D(x) by the plain double loop over r and h."""
    cdef i64 total = 0, r = 1, h, rb
    with nogil:
        while _pow_le(r, b, x):
            rb = _ipow(r, b)
            h = 1
            while _pow_le(h, a, x // rb):
                total += 1
                h += 1
            r += 1
    return total


def window_multiplicities(int a, int b, i64 lo, i64 hi):
    """d(n) for lo < n <= hi, as a uint32 array indexed by n - lo - 1."""
    out = np.zeros(max(hi - lo, 0), dtype=np.uint32)
    cdef u32[::1] d = out
    cdef i64 r = 1, rb, h, hmin, hmax
    with nogil:
        while hi > lo and _pow_le(r, b, hi):
            rb = _ipow(r, b)
            hmin = _iroot(lo // rb, a) + 1
            hmax = _iroot(hi // rb, a)
            for h in range(hmin, hmax + 1):
                d[_ipow(h, a) * rb - lo - 1] += 1
            r += 1
    return out


cdef inline double _horner(const double[::1] c, double s) noexcept nogil:
    cdef Py_ssize_t k = c.shape[0] - 1
    cdef double acc = c[k]
    while k > 0:
        k -= 1
        acc = acc * s + c[k]
    return acc


cdef inline double _phi1_closed(double g, double s) noexcept nogil:
    return expm1((g + 1.0) * log1p(s)) / (g + 1.0) - s


def piece_integrals(
    const double[::1] p,
    const double[::1] length,
    const double[::1] count,
    double c0, double c1, double g0, double g1,
    const double[::1] ser1_0, const double[::1] ser1_1,
    const double[::1] ser2_00, const double[::1] ser2_01, const double[::1] ser2_11,
    double switch,
    double[::1] int1, double[::1] int2, double[::1] dstart, double[::1] dend,
):
    """Exact-form integrals of D - c0 x^g0 - c1 x^g1 and its square on [p, p+L).

    Writes per-piece results; see _pykernels.piece_integrals for the algebra.
    """
    cdef Py_ssize_t i, n = p.shape[0]
    cdef double pp, L, s, pg0, pg1, f10, f11, f200, f201, f211, i1, i2, d, lp
    with nogil:
        for i in range(n):
            pp = p[i]
            L = length[i]
            s = L / pp
            pg0 = pow(pp, g0)
            pg1 = pow(pp, g1)
            if s < switch:
                f10 = s * s * _horner(ser1_0, s)
                f11 = s * s * _horner(ser1_1, s)
                f200 = s * s * s * _horner(ser2_00, s)
                f201 = s * s * s * _horner(ser2_01, s)
                f211 = s * s * s * _horner(ser2_11, s)
            else:
                f10 = _phi1_closed(g0, s)
                f11 = _phi1_closed(g1, s)
                f200 = _phi1_closed(2 * g0, s) - 2 * f10
                f201 = _phi1_closed(g0 + g1, s) - f10 - f11
                f211 = _phi1_closed(2 * g1, s) - 2 * f11
            i1 = c0 * pg0 * pp * f10 + c1 * pg1 * pp * f11
            i2 = pp * (c0 * c0 * pg0 * pg0 * f200 + 2 * c0 * c1 * pg0 * pg1 * f201 + c1 * c1 * pg1 * pg1 * f211)
            d = count[i] - (c0 * pg0 + c1 * pg1)
            int1[i] = d * L - i1
            int2[i] = d * d * L - 2 * d * i1 + i2
            dstart[i] = d
            lp = log1p(s)
            dend[i] = d - (c0 * pg0 * expm1(g0 * lp) + c1 * pg1 * expm1(g1 * lp))


cdef inline void _two_prod(double a, double b, double* p, double* e) noexcept nogil:
    cdef double split = 134217729.0
    cdef double t, ah, al, bh, bl
    p[0] = a * b
    t = split * a
    ah = t - (t - a)
    al = a - ah
    t = split * b
    bh = t - (t - b)
    bl = b - bh
    e[0] = ((ah * bh - p[0]) + ah * bl + al * bh) + al * bl


def cosine_sums(
    const double[::1] freq_hi, const double[::1] freq_lo,
    const double[::1] v_hi, const double[::1] v_lo,
    const double[::1] w,
    double[::1] out,
):
    """out[i] = sum_k w[k] cos(2 pi {F_i v_k} - pi/4), F_i and v_k in double-double.

    The product F_i v_k is formed in double-double and reduced modulo 1
    before scaling by 2 pi; summation is Neumaier-compensated in k order.
    """
    cdef Py_ssize_t i, k, nx = freq_hi.shape[0], nk = w.shape[0]
    cdef double ph, pe, f, term, acc, comp, t
    with nogil:
        for i in range(nx):
            acc = 0.0
            comp = 0.0
            for k in range(nk):
                _two_prod(freq_hi[i], v_hi[k], &ph, &pe)
                f = ph - floor(ph)
                f += pe + freq_hi[i] * v_lo[k] + freq_lo[i] * v_hi[k]
                f -= floor(f)
                term = w[k] * cos(2.0 * M_PI * f - 0.25 * M_PI)
                t = acc + term
                if fabs(acc) >= fabs(term):
                    comp += (acc - t) + term
                else:
                    comp += (term - t) + acc
                acc = t
            out[i] = acc + comp
