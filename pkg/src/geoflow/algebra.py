"""Complex numbers, quaternions and octonions by Cayley-Dickson doubling.

Convention (fixed throughout the library)::

    (a, b)(c, d) = (a c - conj(d) b,  d a + b conj(c)),   conj(a, b) = (conj(a), -b)

Components are ordered ``(1, e1, ..., e_{n-1})``.  With this convention the
quaternion units satisfy ``e1 e2 = e3`` (i j = k), and for octonions
``e1 e2 = e3``, ``e1 e4 = e5``, ``e2 e4 = e6``, ``e3 e4 = e7``.

Products are exposed as bilinear maps through structure constants so that
they accept :class:`~geoflow.dual.Dual` arrays.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from . import dual


def _conj(x):
    if len(x) == 1:
        return x.copy()
    h = len(x) // 2
    return np.concatenate([_conj(x[:h]), -x[h:]])


def _cd_mul(x, y):
    if len(x) == 1:
        return x * y
    h = len(x) // 2
    a, b = x[:h], x[h:]
    c, d = y[:h], y[h:]
    return np.concatenate([_cd_mul(a, c) - _cd_mul(_conj(d), b), _cd_mul(d, a) + _cd_mul(b, _conj(c))])


@lru_cache(maxsize=None)
def structure_constants(dim: int) -> np.ndarray:
    """``C[i, j, k]`` with ``(u v)_i = C[i, j, k] u_j v_k`` for the algebra of size ``dim``."""
    if dim not in (1, 2, 4, 8, 16):
        raise ValueError("Cayley-Dickson algebras have dimension 1, 2, 4, 8 or 16")
    C = np.zeros((dim, dim, dim))
    eye = np.eye(dim)
    for j in range(dim):
        for k in range(dim):
            C[:, j, k] = _cd_mul(eye[j], eye[k])
    C.setflags(write=False)
    return C


def multiply(u, v):
    """Cayley-Dickson product of two elements of equal dimension."""
    n = np.shape(dual.value(u))[-1]
    return dual.einsum("ijk,j,k->i", structure_constants(n), u, v)


def conj(u):
    n = np.shape(dual.value(u))[-1]
    return u * np.concatenate([[1.0], -np.ones(n - 1)])


def norm(u):
    return np.sqrt(np.sum(u * u))


def inverse(u):
    return conj(u) / np.sum(u * u)


def left_matrix(m):
    """Matrix of ``u -> m u``."""
    n = np.shape(dual.value(m))[-1]
    return dual.einsum("ijk,j->ik", structure_constants(n), m)


def right_matrix(m):
    """Matrix of ``u -> u m``."""
    n = np.shape(dual.value(m))[-1]
    return dual.einsum("ijk,k->ij", structure_constants(n), m)


def unit(n: int, i: int) -> np.ndarray:
    e = np.zeros(n)
    e[i] = 1.0
    return e


def associator(u, v, w):
    return multiply(multiply(u, v), w) - multiply(u, multiply(v, w))


# quaternion conveniences (dimension 4)
ONE, I, J, K = (unit(4, i) for i in range(4))


def qmul(p, q):
    return multiply(p, q)


def qexp(v):
    """Exponential of an imaginary quaternion given by its 3 imaginary components."""
    v = np.asarray(v, dtype=float)
    th = np.linalg.norm(v)
    if th == 0.0:
        return ONE.copy()
    return np.concatenate([[np.cos(th)], np.sin(th) * v / th])


def u1_exp(theta):
    """Group exponential of U(1) embedded as ``cos(theta) + i sin(theta)``."""
    return np.array([np.cos(theta), np.sin(theta), 0.0, 0.0])
