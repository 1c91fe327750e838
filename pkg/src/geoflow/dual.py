"""Vectorized forward-mode dual numbers and the jet facility.

A :class:`Dual` carries a value array of shape ``S`` and a derivative array
of shape ``S + (k,)``: one tangent slot per seeded input direction.  Model
closures written with ordinary numpy calls (``np.exp``, ``np.stack``, ``@``,
``np.einsum``...) propagate exact first derivatives through it.

Second derivatives are obtained by central differences of exact first
derivatives (see :func:`jet`).
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DifferentiationError

EPS = np.finfo(float).eps


class Dual:
    """Array of dual numbers ``val + der . eps``."""

    __slots__ = ("val", "der")
    __array_priority__ = 1000

    def __init__(self, val, der):
        self.val = np.asarray(val, dtype=float)
        self.der = np.asarray(der, dtype=float)
        if self.der.shape[:-1] != self.val.shape:
            raise ValueError(f"derivative shape {self.der.shape} does not extend {self.val.shape}")

    # -- array protocol ----------------------------------------------------
    @property
    def shape(self):
        return self.val.shape

    @property
    def ndim(self):
        return self.val.ndim

    @property
    def size(self):
        return self.val.size

    @property
    def nder(self):
        return self.der.shape[-1]

    def __len__(self):
        return len(self.val)

    def __repr__(self):
        return f"Dual(val={self.val!r}, nder={self.nder})"

    def __getitem__(self, idx):
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Dual(self.val[idx], self.der[idx + (slice(None),)])

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def T(self):
        return self.transpose()

    def transpose(self, *axes):
        if not axes:
            axes = tuple(reversed(range(self.ndim)))
        elif len(axes) == 1 and not isinstance(axes[0], int):
            axes = tuple(axes[0])
        return Dual(self.val.transpose(axes), self.der.transpose(tuple(axes) + (self.ndim,)))

    def reshape(self, *shape):
        if len(shape) == 1 and not isinstance(shape[0], int):
            shape = tuple(shape[0])
        val = self.val.reshape(shape)
        return Dual(val, self.der.reshape(val.shape + (self.nder,)))

    def sum(self, axis=None):
        return _sum(self, axis)

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other):
        return np.add(self, other)

    def __radd__(self, other):
        return np.add(other, self)

    def __sub__(self, other):
        return np.subtract(self, other)

    def __rsub__(self, other):
        return np.subtract(other, self)

    def __mul__(self, other):
        return np.multiply(self, other)

    def __rmul__(self, other):
        return np.multiply(other, self)

    def __truediv__(self, other):
        return np.true_divide(self, other)

    def __rtruediv__(self, other):
        return np.true_divide(other, self)

    def __pow__(self, other):
        return np.power(self, other)

    def __neg__(self):
        return Dual(-self.val, -self.der)

    def __pos__(self):
        return self

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __abs__(self):
        return np.absolute(self)

    # -- numpy dispatch ----------------------------------------------------
    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method != "__call__" or kwargs.get("out") is not None:
            return NotImplemented
        if ufunc is np.matmul:
            return matmul(*inputs)
        rule = _UFUNC_RULES.get(ufunc)
        if rule is None:
            raise DifferentiationError(f"no dual-number rule for ufunc {ufunc.__name__}")
        return rule(*inputs)

    def __array_function__(self, func, types, args, kwargs):
        impl = _FUNCTIONS.get(func)
        if impl is None:
            raise DifferentiationError(f"no dual-number rule for {func.__name__}")
        return impl(*args, **kwargs)


def value(a):
    """Strip derivative information."""
    return a.val if isinstance(a, Dual) else np.asarray(a, dtype=float)


def _nder(*args):
    for a in args:
        if isinstance(a, Dual):
            return a.nder
    return None


def _lift(a, k):
    if isinstance(a, Dual):
        return a
    a = np.asarray(a, dtype=float)
    return Dual(a, np.zeros(a.shape + (k,)))


def _e(a):
    return a[..., None]


# -- ufunc rules ------------------------------------------------------------
def _add(a, b):
    k = _nder(a, b)
    a, b = _lift(a, k), _lift(b, k)
    val = a.val + b.val
    return Dual(val, np.broadcast_to(a.der, val.shape + (k,)) + b.der)


def _sub(a, b):
    k = _nder(a, b)
    a, b = _lift(a, k), _lift(b, k)
    val = a.val - b.val
    return Dual(val, np.broadcast_to(a.der, val.shape + (k,)) - b.der)


def _mul(a, b):
    if not isinstance(a, Dual):
        a = np.asarray(a, dtype=float)
        return Dual(a * b.val, _e(a) * b.der)
    if not isinstance(b, Dual):
        b = np.asarray(b, dtype=float)
        return Dual(a.val * b, a.der * _e(b))
    return Dual(a.val * b.val, a.der * _e(b.val) + _e(a.val) * b.der)


def _div(a, b):
    if not isinstance(b, Dual):
        b = np.asarray(b, dtype=float)
        return Dual(a.val / b, a.der / _e(b))
    inv = 1.0 / b.val
    if not isinstance(a, Dual):
        a = np.asarray(a, dtype=float)
        val = a * inv
        return Dual(val, -_e(val * inv) * b.der)
    val = a.val * inv
    return Dual(val, (a.der - _e(val) * b.der) * _e(inv))


def _power(a, c):
    if isinstance(c, Dual):
        if not isinstance(a, Dual):
            a = np.asarray(a, dtype=float)
            val = a**c.val
            return Dual(val, _e(val * np.log(a)) * c.der)
        return np.exp(c * np.log(a))
    c = np.asarray(c, dtype=float)
    return Dual(a.val**c, _e(c * a.val ** (c - 1.0)) * a.der)


def _unary(f, df):
    def rule(a):
        return Dual(f(a.val), _e(df(a.val)) * a.der)

    return rule


def _exp(a):
    val = np.exp(a.val)
    return Dual(val, _e(val) * a.der)


def _sqrt(a):
    val = np.sqrt(a.val)
    return Dual(val, a.der / _e(2.0 * val))


def _arctan2(y, x):
    k = _nder(y, x)
    y, x = _lift(y, k), _lift(x, k)
    r2 = x.val**2 + y.val**2
    return Dual(np.arctan2(y.val, x.val), (_e(x.val) * y.der - _e(y.val) * x.der) / _e(r2))


_UFUNC_RULES = {
    np.add: _add,
    np.subtract: _sub,
    np.multiply: _mul,
    np.true_divide: _div,
    np.power: _power,
    np.negative: lambda a: -a,
    np.positive: lambda a: a,
    np.exp: _exp,
    np.sqrt: _sqrt,
    np.square: lambda a: _mul(a, a),
    np.reciprocal: lambda a: _div(1.0, a),
    np.log: _unary(np.log, lambda v: 1.0 / v),
    np.sin: _unary(np.sin, np.cos),
    np.cos: _unary(np.cos, lambda v: -np.sin(v)),
    np.tan: _unary(np.tan, lambda v: 1.0 / np.cos(v) ** 2),
    np.sinh: _unary(np.sinh, np.cosh),
    np.cosh: _unary(np.cosh, np.sinh),
    np.tanh: _unary(np.tanh, lambda v: 1.0 - np.tanh(v) ** 2),
    np.arctan: _unary(np.arctan, lambda v: 1.0 / (1.0 + v * v)),
    np.arcsin: _unary(np.arcsin, lambda v: 1.0 / np.sqrt(1.0 - v * v)),
    np.arccos: _unary(np.arccos, lambda v: -1.0 / np.sqrt(1.0 - v * v)),
    np.absolute: _unary(np.abs, np.sign),
    np.arctan2: _arctan2,
}


# -- array functions --------------------------------------------------------
def einsum(subscripts: str, *operands):
    """``np.einsum`` with the product rule over every dual operand."""
    if not any(isinstance(op, Dual) for op in operands):
        return np.einsum(subscripts, *operands)
    k = _nder(*operands)
    if "->" in subscripts:
        lhs, out = subscripts.split("->")
    else:
        raise DifferentiationError("dual einsum requires an explicit output ('->')")
    ins = lhs.split(",")
    free = next(c for c in string.ascii_letters if c not in subscripts)
    vals = [value(op) for op in operands]
    val = np.einsum(subscripts, *vals)
    der = np.zeros(np.shape(val) + (k,))
    for i, op in enumerate(operands):
        if not isinstance(op, Dual):
            continue
        subs = list(ins)
        subs[i] = subs[i] + free
        args = vals[:i] + [op.der] + vals[i + 1 :]
        der = der + np.einsum(",".join(subs) + "->" + out + free, *args)
    return Dual(val, der)


_MATMUL_SUBS = {(2, 2): "ij,jl->il", (2, 1): "ij,j->i", (1, 2): "j,jl->l", (1, 1): "j,j->"}


def matmul(a, b):
    key = (np.ndim(value(a)), np.ndim(value(b)))
    if key not in _MATMUL_SUBS:
        raise DifferentiationError(f"dual matmul supports 1-d/2-d operands, got {key}")
    return einsum(_MATMUL_SUBS[key], a, b)


def _dot(a, b):
    return matmul(a, b)


def _outer(a, b):
    k = _nder(a, b)
    a, b = _lift(a, k).reshape(-1), _lift(b, k).reshape(-1)
    return einsum("i,j->ij", a, b)


def _normalize_axis(axis, ndim):
    return axis if axis >= 0 else axis + ndim


def _stack(arrays, axis=0, **kwargs):
    arrays = list(arrays)
    k = _nder(*arrays)
    lifted = [_lift(a, k) for a in arrays]
    ndim = lifted[0].ndim + 1
    ax = _normalize_axis(axis, ndim)
    return Dual(np.stack([a.val for a in lifted], axis=ax), np.stack([a.der for a in lifted], axis=ax))


def _concatenate(arrays, axis=0, **kwargs):
    arrays = list(arrays)
    k = _nder(*arrays)
    lifted = [_lift(a, k) for a in arrays]
    ax = _normalize_axis(axis, lifted[0].ndim)
    return Dual(
        np.concatenate([a.val for a in lifted], axis=ax),
        np.concatenate([a.der for a in lifted], axis=ax),
    )


def _hstack(arrays):
    arrays = list(arrays)
    return _concatenate(arrays, axis=0 if np.ndim(value(arrays[0])) == 1 else 1)


def _vstack(arrays):
    arrays = [a if np.ndim(value(a)) > 1 else (a.reshape(1, -1) if isinstance(a, Dual) else np.reshape(a, (1, -1))) for a in arrays]
    return _concatenate(arrays, axis=0)


def _column_stack(arrays):
    arrays = [a if np.ndim(value(a)) > 1 else (a.reshape(-1, 1) if isinstance(a, Dual) else np.reshape(a, (-1, 1))) for a in arrays]
    return _concatenate(arrays, axis=1)


def _sum(a, axis=None, **kwargs):
    if not isinstance(a, Dual):
        return np.sum(a, axis=axis)
    if axis is None:
        axes = tuple(range(a.ndim))
    elif isinstance(axis, int):
        axes = (_normalize_axis(axis, a.ndim),)
    else:
        axes = tuple(_normalize_axis(x, a.ndim) for x in axis)
    return Dual(a.val.sum(axis=axes), a.der.sum(axis=axes))


def _transpose(a, axes=None):
    return a.transpose() if axes is None else a.transpose(axes)


def _trace(a, **kwargs):
    return einsum("ii->", a)


def _reshape(a, shape, **kwargs):
    return a.reshape(shape)


def _diag(v, k=0):
    if k != 0 or v.ndim != 1:
        raise DifferentiationError("dual diag supports building a matrix from a vector")
    n = v.shape[0]
    return einsum("i,ij->ij", v, np.eye(n))


def _zeros_like(a, **kwargs):
    return np.zeros(a.shape)


def _ones_like(a, **kwargs):
    return np.ones(a.shape)


def inv(a):
    """Matrix inverse with derivative ``-A^{-1} dA A^{-1}``."""
    if not isinstance(a, Dual):
        return np.linalg.inv(a)
    ainv = np.linalg.inv(a.val)
    return Dual(ainv, -np.einsum("ij,jlk,lm->imk", ainv, a.der, ainv))


def solve(a, b):
    """Linear solve ``a x = b`` for dual or plain operands."""
    if not isinstance(a, Dual) and not isinstance(b, Dual):
        return np.linalg.solve(a, b)
    k = _nder(a, b)
    av, bv = value(a), value(b)
    x = np.linalg.solve(av, bv)
    rhs = _lift(b, k).der
    if isinstance(a, Dual):
        if x.ndim == 1:
            rhs = rhs - np.einsum("ijk,j->ik", a.der, x)
        else:
            rhs = rhs - np.einsum("ijk,jl->ilk", a.der, x)
    if x.ndim == 1:
        dx = np.linalg.solve(av, rhs)
    else:
        m, l = x.shape
        dx = np.linalg.solve(av, rhs.reshape(m, l * k)).reshape(m, l, k)
    return Dual(x, dx)


def _norm(a, ord=None, axis=None, **kwargs):
    if ord is not None or axis is not None:
        raise DifferentiationError("dual norm supports the default 2-norm only")
    return np.sqrt(_sum(a * a))


_FUNCTIONS = {
    np.einsum: einsum,
    np.matmul: matmul,
    np.dot: _dot,
    np.outer: _outer,
    np.stack: _stack,
    np.concatenate: _concatenate,
    np.hstack: _hstack,
    np.vstack: _vstack,
    np.column_stack: _column_stack,
    np.sum: _sum,
    np.transpose: _transpose,
    np.trace: _trace,
    np.reshape: _reshape,
    np.diag: _diag,
    np.zeros_like: _zeros_like,
    np.ones_like: _ones_like,
    np.linalg.inv: inv,
    np.linalg.solve: solve,
    np.linalg.norm: _norm,
}


def seed(x) -> Dual:
    """Seed an input vector with the identity tangent (one slot per coordinate)."""
    x = np.asarray(x, dtype=float)
    return Dual(x, np.eye(x.size).reshape(x.shape + (x.size,)))


# -- jet facility -------------------------------------------------------------
@dataclass(frozen=True)
class JetResult:
    """Value and partial derivatives of a field at a point.

    ``first[..., i]`` is the partial along coordinate ``i``; ``second[..., i, j]``
    the mixed second partial, present only for ``order=2``.
    """

    value: np.ndarray
    first: np.ndarray
    second: np.ndarray | None = None
    method: str = "dual"


def fd_step(x, order: int = 1) -> np.ndarray:
    """Central-difference step per coordinate: ``eps^(1/3)`` (or ``eps^(1/4)``) times scale."""
    scale = np.maximum(1.0, np.abs(np.asarray(x, dtype=float)))
    return (EPS ** (1.0 / 3.0) if order == 1 else EPS ** 0.25) * scale


def _dual_jacobian(f, x):
    out = f(seed(x))
    if isinstance(out, Dual):
        return out.val, out.der
    out = np.asarray(out, dtype=float)
    return out, np.zeros(out.shape + (np.size(x),))


def _central_jacobian(f, x, h=None):
    x = np.asarray(x, dtype=float)
    h = fd_step(x) if h is None else np.broadcast_to(h, x.shape)
    f0 = np.asarray(f(x), dtype=float)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h[i]
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2.0 * h[i]))
    return f0, np.stack(cols, axis=-1)


def jacobian(f: Callable, x, method: str = "dual"):
    """Return ``(f(x), J)`` with ``J[..., i] = d f / d x_i``.

    ``method`` is ``"dual"`` (exact), ``"central"`` (finite differences) or
    ``"auto"`` (dual, falling back to central differences when the closure
    cannot propagate dual numbers).
    """
    x = np.asarray(x, dtype=float)
    if method == "central":
        return _central_jacobian(f, x)
    try:
        return _dual_jacobian(f, x)
    except (DifferentiationError, TypeError, ValueError) as exc:
        if method == "auto":
            return _central_jacobian(f, x)
        raise DifferentiationError(f"dual evaluation failed: {exc}") from exc


def jet(f: Callable, x, order: int = 1, method: str = "dual", guard=None) -> JetResult:
    """Derivatives of ``f`` at ``x`` up to ``order`` (1 or 2).

    Second partials are central differences of exact first partials when
    ``method`` is dual, and nested central differences otherwise.
    ``guard`` (a predicate on coordinates) is checked at every stencil point.
    """
    from .errors import OutOfChart

    x = np.asarray(x, dtype=float)
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if guard is not None:
        h = fd_step(x, order)
        for i in range(x.size):
            for s in (-1.0, 1.0):
                e = np.zeros_like(x)
                e[i] = s * h[i]
                if not guard(x + e):
                    raise OutOfChart(f"jet stencil leaves the chart guard at {x + e}")
    val, first = jacobian(f, x, method)
    if order == 1:
        return JetResult(val, first, None, method)
    h = fd_step(x, 2) if method == "central" else fd_step(x, 1)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h[i]
        jp = jacobian(f, x + e, method)[1]
        jm = jacobian(f, x - e, method)[1]
        cols.append((jp - jm) / (2.0 * h[i]))
    second = np.stack(cols, axis=-1)
    return JetResult(val, first, second, method)


def cross_check(f: Callable, x) -> float:
    """Max abs difference between dual and central-difference first partials."""
    _, jd = jacobian(f, x, "dual")
    _, jc = jacobian(f, x, "central")
    return float(np.max(np.abs(jd - jc))) if jd.size else 0.0
