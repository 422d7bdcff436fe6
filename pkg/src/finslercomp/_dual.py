"""Nested forward-mode dual numbers with level tags.

A Dual holds a value part and a derivative part relative to one seed level.
Parts are floats, numpy arrays (batched evaluation), or Duals of strictly
lower level. Levels come from a global counter, so seeds created at
different nesting depths can never be confused with each other.
"""

import numpy as np

_COUNTER = [0]


def fresh_level():
    _COUNTER[0] += 1
    return _COUNTER[0]


def _lv(u):
    return u.lv if type(u) is Dual else 0


def _is_zero(u):
    # fast path marker for absent derivative parts
    return type(u) is float and u == 0.0


def _parts(u, lv):
    if type(u) is Dual and u.lv == lv:
        return u.a, u.b
    return u, 0.0


class Dual:
    __slots__ = ("lv", "a", "b")
    # make numpy defer binary ops to the reflected methods below
    __array_ufunc__ = None

    def __init__(self, lv, a, b):
        self.lv = lv
        self.a = a
        self.b = b

    def __repr__(self):
        return "Dual(lv=%d, a=%r, b=%r)" % (self.lv, self.a, self.b)

    def __add__(self, o):
        return _add(self, o)

    __radd__ = __add__

    def __sub__(self, o):
        return _sub(self, o)

    def __rsub__(self, o):
        return _sub(o, self)

    def __mul__(self, o):
        return _mul(self, o)

    __rmul__ = __mul__

    def __truediv__(self, o):
        return _div(self, o)

    def __rtruediv__(self, o):
        return _div(o, self)

    def __neg__(self):
        return _neg(self)

    def __pos__(self):
        return self

    def __pow__(self, p):
        return dpow(self, p)


def _add(x, y):
    lv = max(_lv(x), _lv(y))
    if lv == 0:
        return x + y
    xa, xb = _parts(x, lv)
    ya, yb = _parts(y, lv)
    if _is_zero(xb):
        db = yb
    elif _is_zero(yb):
        db = xb
    else:
        db = _add(xb, yb)
    return Dual(lv, _add(xa, ya), db)


def _sub(x, y):
    lv = max(_lv(x), _lv(y))
    if lv == 0:
        return x - y
    xa, xb = _parts(x, lv)
    ya, yb = _parts(y, lv)
    if _is_zero(yb):
        db = xb
    elif _is_zero(xb):
        db = _neg(yb)
    else:
        db = _sub(xb, yb)
    return Dual(lv, _sub(xa, ya), db)


def _neg(x):
    if type(x) is not Dual:
        return -x
    return Dual(x.lv, _neg(x.a), x.b if _is_zero(x.b) else _neg(x.b))


def _mul(x, y):
    lv = max(_lv(x), _lv(y))
    if lv == 0:
        return x * y
    xa, xb = _parts(x, lv)
    ya, yb = _parts(y, lv)
    if _is_zero(xb):
        db = 0.0 if _is_zero(yb) else _mul(xa, yb)
    elif _is_zero(yb):
        db = _mul(xb, ya)
    else:
        db = _add(_mul(xa, yb), _mul(xb, ya))
    return Dual(lv, _mul(xa, ya), db)


def _div(x, y):
    lv = max(_lv(x), _lv(y))
    if lv == 0:
        return x / y
    xa, xb = _parts(x, lv)
    ya, yb = _parts(y, lv)
    q = _div(xa, ya)
    if _is_zero(yb):
        db = 0.0 if _is_zero(xb) else _div(xb, ya)
    else:
        num = _neg(_mul(q, yb)) if _is_zero(xb) else _sub(xb, _mul(q, yb))
        db = _div(num, ya)
    return Dual(lv, q, db)


def dpow(x, p):
    """x**p for numeric p; p must not carry derivative parts."""
    if type(x) is not Dual:
        return x ** p
    if isinstance(p, Dual):
        raise TypeError("dual exponents are not supported")
    if p == 0:
        return 1.0
    if p == 1:
        return x
    if p == 2:
        return _mul(x, x)
    a = dpow(x.a, p)
    if _is_zero(x.b):
        return Dual(x.lv, a, 0.0)
    da = _mul(float(p), dpow(x.a, p - 1))
    return Dual(x.lv, a, _mul(da, x.b))


# dual-safe math shim; every function accepts floats, arrays, or Duals


def sqrt(x):
    if type(x) is not Dual:
        return np.sqrt(x)
    s = sqrt(x.a)
    if _is_zero(x.b):
        return Dual(x.lv, s, 0.0)
    return Dual(x.lv, s, _div(_mul(0.5, x.b), s))


def exp(x):
    if type(x) is not Dual:
        return np.exp(x)
    e = exp(x.a)
    return Dual(x.lv, e, 0.0 if _is_zero(x.b) else _mul(e, x.b))


def log(x):
    if type(x) is not Dual:
        return np.log(x)
    return Dual(x.lv, log(x.a), 0.0 if _is_zero(x.b) else _div(x.b, x.a))


def sin(x):
    if type(x) is not Dual:
        return np.sin(x)
    return Dual(x.lv, sin(x.a), 0.0 if _is_zero(x.b) else _mul(cos(x.a), x.b))


def cos(x):
    if type(x) is not Dual:
        return np.cos(x)
    return Dual(x.lv, cos(x.a), 0.0 if _is_zero(x.b) else _neg(_mul(sin(x.a), x.b)))


def sinh(x):
    if type(x) is not Dual:
        return np.sinh(x)
    return Dual(x.lv, sinh(x.a), 0.0 if _is_zero(x.b) else _mul(cosh(x.a), x.b))


def cosh(x):
    if type(x) is not Dual:
        return np.cosh(x)
    return Dual(x.lv, cosh(x.a), 0.0 if _is_zero(x.b) else _mul(sinh(x.a), x.b))


def atan2(y, x):
    lv = max(_lv(y), _lv(x))
    if lv == 0:
        return np.arctan2(y, x)
    ya, yb = _parts(y, lv)
    xa, xb = _parts(x, lv)
    val = atan2(ya, xa)
    if _is_zero(yb) and _is_zero(xb):
        return Dual(lv, val, 0.0)
    den = _add(_mul(xa, xa), _mul(ya, ya))
    t1 = 0.0 if _is_zero(yb) else _mul(xa, yb)
    t2 = 0.0 if _is_zero(xb) else _mul(ya, xb)
    return Dual(lv, val, _div(_sub(t1, t2), den))


def absval(x):
    """|x|, differentiated with the locally constant sign of the value part."""
    if type(x) is not Dual:
        return np.abs(x)
    s = np.sign(real(x))
    return _mul(s + 0.0, x)


def real(x):
    """Strip all derivative parts, returning the underlying float/array value."""
    while type(x) is Dual:
        x = x.a
    return x


def eps_part(x, lv):
    """Coefficient of the level-lv seed inside x (still dual in other levels)."""
    if type(x) is not Dual:
        return 0.0
    if x.lv == lv:
        return x.b
    if x.lv < lv:
        return 0.0
    return Dual(x.lv, eps_part(x.a, lv), eps_part(x.b, lv))


def derivative(f, x0, order=1):
    """Exact d^order f / dx^order at x0 for a scalar-to-scalar f."""
    levels = []
    val = x0
    for _ in range(order):
        lv = fresh_level()
        levels.append(lv)
        val = Dual(lv, val, 1.0)
    out = f(val)
    for lv in reversed(levels):
        out = eps_part(out, lv)
    return real(out)
