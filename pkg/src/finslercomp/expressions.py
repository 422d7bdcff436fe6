"""Tiny expression grammar for scalar fields given as JSON.

An expression is a number, a variable token ("x0".."x<n-1>", "v0"..,
or "t" for curve parameters), or a list [op, arg, ...]. Parsed
expressions become callables built on the dual-safe math shim, so they
can be differentiated exactly and evaluated on batched arrays.
"""

from . import _dual as d
from .errors import ValidationError

_UNARY = {
    "neg": lambda u: -u,
    "sqrt": d.sqrt,
    "exp": d.exp,
    "log": d.log,
    "sin": d.sin,
    "cos": d.cos,
    "sinh": d.sinh,
    "cosh": d.cosh,
    "abs": d.absval,
}

_BINARY = {
    "sub": lambda u, w: u - w,
    "div": lambda u, w: u / w,
}

_NARY = {
    "add": lambda args: _fold(args, lambda u, w: u + w),
    "mul": lambda args: _fold(args, lambda u, w: u * w),
}


def _fold(args, op):
    out = args[0]
    for a in args[1:]:
        out = op(out, a)
    return out


def parse_expression(obj, dim, slots=("x", "v")):
    """Compile a JSON expression into f(x, v) (or f(x) if slots=('x',))."""
    fn = _compile(obj, dim, slots)
    if len(slots) == 1:
        return lambda x: fn((x,))
    return lambda x, v: fn((x, v))


def _compile(obj, dim, slots):
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        c = float(obj)
        return lambda env: c
    if isinstance(obj, str):
        if obj == "t" and "t" in slots:
            k = slots.index("t")
            return lambda env: env[k]
        for k, s in enumerate(slots):
            if obj.startswith(s) and obj[len(s):].isdigit():
                i = int(obj[len(s):])
                if not 0 <= i < dim:
                    raise ValidationError(
                        "variable %r out of range for dimension %d" % (obj, dim))
                return lambda env, k=k, i=i: env[k][i]
        raise ValidationError("unknown variable token %r" % (obj,))
    if isinstance(obj, (list, tuple)) and obj and isinstance(obj[0], str):
        op = obj[0]
        args = [_compile(a, dim, slots) for a in obj[1:]]
        if op == "pow":
            if len(obj) != 3 or not isinstance(obj[2], (int, float)):
                raise ValidationError("pow needs [pow, base, numeric exponent]")
            base = args[0]
            p = float(obj[2])
            return lambda env: d.dpow(base(env), p)
        if op in _UNARY:
            if len(args) != 1:
                raise ValidationError("%s takes exactly one argument" % op)
            f = _UNARY[op]
            return lambda env: f(args[0](env))
        if op in _BINARY:
            if len(args) != 2:
                raise ValidationError("%s takes exactly two arguments" % op)
            f = _BINARY[op]
            return lambda env: f(args[0](env), args[1](env))
        if op in _NARY:
            if len(args) < 2:
                raise ValidationError("%s takes at least two arguments" % op)
            f = _NARY[op]
            return lambda env: f([a(env) for a in args])
        raise ValidationError(
            "unknown operation %r; available: %s"
            % (op, sorted(set(_UNARY) | set(_BINARY) | set(_NARY) | {"pow"})))
    raise ValidationError("cannot parse expression node %r" % (obj,))
