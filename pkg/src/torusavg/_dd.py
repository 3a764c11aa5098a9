"""Error-free float transforms and double-double helpers.

Scalar functions work on (hi, lo) pairs of Python floats.  The ``v_``
prefixed variants are numpy-vectorized and only keep as much of the
expansion as the streaming engine needs (the final orbit point is a
plain float64 anyway).
"""

import math

import numpy as np

_SPLIT = 134217729.0  # 2**27 + 1, Dekker splitter


def two_sum(a, b):
    s = a + b
    t = s - a
    return s, (a - (s - t)) + (b - t)


def fast_two_sum(a, b):
    # valid only when |a| >= |b|
    s = a + b
    return s, b - (s - a)


def two_prod(a, b):
    p = a * b
    t = _SPLIT * a
    ah = t - (t - a)
    al = a - ah
    t = _SPLIT * b
    bh = t - (t - b)
    bl = b - bh
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def dd_add(x, y):
    s, e = two_sum(x[0], y[0])
    e += x[1] + y[1]
    return fast_two_sum(s, e)


def dd_neg(x):
    return -x[0], -x[1]


def dd_mul_float(x, c):
    p, e = two_prod(x[0], c)
    e += x[1] * c
    return fast_two_sum(p, e)


def dd_mul_int(x, n):
    """x * n for an arbitrary Python int, split into exact 31-bit limbs."""
    if n < 0:
        return dd_neg(dd_mul_int(x, -n))
    out = (0.0, 0.0)
    shift = 0
    while n:
        limb = n & 0x7FFFFFFF
        if limb:
            out = dd_add(out, dd_mul_float(x, float(limb << shift)))
        n >>= 31
        shift += 31
    return out


def dd_div_int(x, q):
    q1 = x[0] / q
    p, pe = two_prod(q1, float(q))
    r = (((x[0] - p) - pe) + x[1]) / q
    return fast_two_sum(q1, r)


def dd_sqrt_int(m):
    s = math.sqrt(m)
    p, pe = two_prod(s, s)
    e = ((m - p) - pe) / (2.0 * s)
    return fast_two_sum(s, e)


def dd_from_fraction(fr):
    return dd_div_int(dd_mul_int((1.0, 0.0), fr.numerator), fr.denominator)


def dd_frac(x, _depth=0):
    """Reduce a double-double into [0, 1), keeping the residue in lo."""
    h = x[0] - math.floor(x[0])
    h, l = two_sum(h, x[1])
    if h >= 1.0:
        h, l = two_sum(h - 1.0, l)
    elif h < 0.0:
        h, l2 = two_sum(h, 1.0)
        l += l2
    if h >= 1.0 or h < 0.0:
        if _depth < 2:
            return dd_frac((h, l), _depth + 1)
        # value hugs an integer to below one ulp; collapse to the boundary
        return 0.0, 0.0
    return h, l


# ---------------------------------------------------------------------------
# vectorized variants


def v_two_sum(a, b):
    s = a + b
    t = s - a
    return s, (a - (s - t)) + (b - t)


def v_two_prod(a, b):
    p = a * b
    t = _SPLIT * a
    ah = t - (t - a)
    al = a - ah
    t = _SPLIT * b
    bh = t - (t - b)
    bl = b - bh
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def v_frac(h, l):
    """Collapse an (h, l) expansion to float64 points in [0, 1)."""
    h = h - np.floor(h)
    s, e = v_two_sum(h, l)
    out = s + e
    out = np.where(out >= 1.0, out - 1.0, out)
    out = np.where(out < 0.0, out + 1.0, out)
    return np.where(out >= 1.0, 0.0, out)
