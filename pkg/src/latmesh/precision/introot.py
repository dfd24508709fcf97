"""Exact integer k-th roots."""

from __future__ import annotations

import math


def integer_kth_root(n: int, k: int) -> int:
    """Return the unique r >= 0 with r**k <= n < (r+1)**k.

    Newton iteration on Python integers; the starting point comes from the
    bit length so it always lies above the root and the iteration decreases
    monotonically onto it.
    """
    n = int(n)
    k = int(k)
    if n < 0:
        raise ValueError("integer_kth_root requires n >= 0")
    if k < 1:
        raise ValueError("integer_kth_root requires k >= 1")
    if k == 1 or n < 2:
        return n
    if k == 2:
        return math.isqrt(n)
    if n.bit_length() <= k:
        # n < 2**k, so the root is 1
        return 1
    # 2**ceil(bits/k) > n**(1/k)
    r = 1 << -(-n.bit_length() // k)
    while True:
        s = ((k - 1) * r + n // r ** (k - 1)) // k
        if s >= r:
            break
        r = s
    while r ** k > n:
        r -= 1
    while (r + 1) ** k <= n:
        r += 1
    return r


def is_perfect_power(n: int, k: int) -> int | None:
    """Return r when n == r**k exactly, else None."""
    if n < 0:
        if k % 2 == 0:
            return None
        r = is_perfect_power(-n, k)
        return None if r is None else -r
    r = integer_kth_root(n, k)
    return r if r ** k == n else None
