"""Pure numpy/Python implementations of the compiled kernels (same signatures).

Per-piece moment algebra: on [p, p+L) with constant count D and
m(x) = c0 x^g0 + c1 x^g1, put s = L/p and d = D - m(p).  Then

    int (D - m) dx   = d L - I1,
    int (D - m)^2 dx = d^2 L - 2 d I1 + I2,

    I1 = sum_j c_j p^(g_j+1) phi1(g_j, s),
    I2 = p sum_jk c_j c_k p^(g_j+g_k) phi2(g_j, g_k, s),

with phi1(g, s) = int_0^s ((1+t)^g - 1) dt and
phi2(g, h, s) = int_0^s ((1+t)^g - 1)((1+t)^h - 1) dt.  Both are evaluated by
their binomial series when s is small (no cancellation) and in closed form
via expm1/log1p otherwise.
"""

from __future__ import annotations

import math

import numpy as np

# integers handled exactly by float64 roots need this many spare bits
_EXACT_LIMIT = 1 << 62


def iroot(n: int, k: int) -> int:
    from latmesh.precision.introot import integer_kth_root

    return integer_kth_root(int(n), int(k))


def _iroot_array(n: np.ndarray, k: int) -> np.ndarray:
    """Elementwise floor(n^(1/k)) for int64 arrays, corrected to exactness."""
    n = np.asarray(n, dtype=np.int64)
    if k == 1:
        return n.copy()
    r = np.floor(np.power(n.astype(np.float64), 1.0 / k)).astype(np.int64)
    r = np.maximum(r, 0)
    # float roots are within one of the truth for n < 2^62; fix both directions
    for _ in range(2):
        too_big = (r > 0) & (_ipow_array(r, k) > n)
        r = r - too_big
        too_small = _ipow_array(r + 1, k) <= n
        r = r + too_small
    return r


def _ipow_array(r: np.ndarray, k: int) -> np.ndarray:
    # saturate at 2^62 so the (r+1)^k probe cannot overflow int64
    cap = iroot(_EXACT_LIMIT - 1, k)
    out = np.minimum(r, cap) ** k
    out[r > cap] = _EXACT_LIMIT
    return out


def hyperbola_counts(a: int, b: int, xs: np.ndarray) -> np.ndarray:
    xs = np.asarray(xs, dtype=np.int64)
    out = np.zeros(xs.shape, dtype=np.int64)
    if xs.size == 0:
        return out
    n0 = _iroot_array(xs, a + b)
    for m in range(1, int(n0.max()) + 1):
        live = n0 >= m
        xm = xs[live]
        out[live] += _iroot_array(xm // m**b, a) + _iroot_array(xm // m**a, b)
    return out - n0 * n0


def naive_count(a: int, b: int, x: int) -> int:
    total = 0
    r = 1
    while r**b <= x:
        rb = r**b
        h = np.arange(1, iroot(x // rb, a) + 2, dtype=object)
        total += int(np.count_nonzero(h**a * rb <= x))
        r += 1
    return total


def window_multiplicities(a: int, b: int, lo: int, hi: int) -> np.ndarray:
    d = np.zeros(max(hi - lo, 0), dtype=np.uint32)
    r = 1
    while hi > lo and r**b <= hi:
        rb = r**b
        hmin = iroot(lo // rb, a) + 1
        hmax = iroot(hi // rb, a)
        if hmax >= hmin:
            h = np.arange(hmin, hmax + 1, dtype=np.int64)
            np.add.at(d, h**a * rb - lo - 1, 1)
        r += 1
    return d


def _horner(coef: np.ndarray, s: np.ndarray) -> np.ndarray:
    acc = np.full_like(s, coef[-1])
    for c in coef[-2::-1]:
        acc = acc * s + c
    return acc


def _phi1_closed(g: float, s: np.ndarray) -> np.ndarray:
    return np.expm1((g + 1.0) * np.log1p(s)) / (g + 1.0) - s


def piece_integrals(
    p, length, count, c0, c1, g0, g1, ser1_0, ser1_1, ser2_00, ser2_01, ser2_11, switch,
    int1, int2, dstart, dend,
):
    p = np.asarray(p)
    L = np.asarray(length)
    s = L / p
    small = s < switch
    pg0 = np.power(p, g0)
    pg1 = np.power(p, g1)
    s2, s3 = s * s, s * s * s
    f10 = np.where(small, s2 * _horner(ser1_0, s), 0.0)
    f11 = np.where(small, s2 * _horner(ser1_1, s), 0.0)
    f200 = np.where(small, s3 * _horner(ser2_00, s), 0.0)
    f201 = np.where(small, s3 * _horner(ser2_01, s), 0.0)
    f211 = np.where(small, s3 * _horner(ser2_11, s), 0.0)
    if not small.all():
        big = ~small
        sb = s[big]
        a0, a1 = _phi1_closed(g0, sb), _phi1_closed(g1, sb)
        f10[big], f11[big] = a0, a1
        f200[big] = _phi1_closed(2 * g0, sb) - 2 * a0
        f201[big] = _phi1_closed(g0 + g1, sb) - a0 - a1
        f211[big] = _phi1_closed(2 * g1, sb) - 2 * a1
    i1 = c0 * pg0 * p * f10 + c1 * pg1 * p * f11
    i2 = p * (c0 * c0 * pg0 * pg0 * f200 + 2 * c0 * c1 * pg0 * pg1 * f201 + c1 * c1 * pg1 * pg1 * f211)
    d = np.asarray(count) - (c0 * pg0 + c1 * pg1)
    int1[:] = d * L - i1
    int2[:] = d * d * L - 2 * d * i1 + i2
    dstart[:] = d
    lp = np.log1p(s)
    dend[:] = d - (c0 * pg0 * np.expm1(g0 * lp) + c1 * pg1 * np.expm1(g1 * lp))


_SPLIT = 134217729.0


def _split(a):
    t = _SPLIT * a
    hi = t - (t - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def cosine_sums(freq_hi, freq_lo, v_hi, v_lo, w, out):
    v_hi = np.asarray(v_hi)
    v_lo = np.asarray(v_lo)
    w = np.asarray(w)
    for i in range(len(freq_hi)):
        fh, fl = float(freq_hi[i]), float(freq_lo[i])
        ph, pe = _two_prod(fh, v_hi)
        f = ph - np.floor(ph)
        f = f + (pe + fh * v_lo + fl * v_hi)
        f -= np.floor(f)
        out[i] = math.fsum((w * np.cos(2.0 * math.pi * f - 0.25 * math.pi)).tolist())
