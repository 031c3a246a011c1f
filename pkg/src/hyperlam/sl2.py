"""Vectorized helpers for stacks of real unimodular 2x2 matrices.

Matrices are ``numpy`` arrays of shape ``(..., 2, 2)``.  The upper half-plane
is the model in which they act by Mobius transformations; the base point of
the identity is ``i`` and its tangent vector points straight up.
"""

import numpy as np


def as_stack(g):
    g = np.asarray(g, dtype=float)
    if g.shape[-2:] != (2, 2):
        raise ValueError(f"expected (..., 2, 2) matrices, got shape {g.shape}")
    return g


def identity(n=None):
    if n is None:
        return np.eye(2)
    return np.tile(np.eye(2), (n, 1, 1))


def det(g):
    return g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0]


def inverse(g):
    out = np.empty_like(g)
    out[..., 0, 0] = g[..., 1, 1]
    out[..., 0, 1] = -g[..., 0, 1]
    out[..., 1, 0] = -g[..., 1, 0]
    out[..., 1, 1] = g[..., 0, 0]
    return out


def mul(g, h):
    """Matrix product with broadcasting over leading axes."""
    return np.matmul(g, h)


def renormalize(g):
    """Divide by ``sqrt(det)`` so that the determinant is one again."""
    return g / np.sqrt(det(g))[..., None, None]


def canonical(g):
    """Pick the sign representative of ``+-g`` in PSL(2,R).

    The first nonzero entry of the first column is made positive.
    """
    a = g[..., 0, 0]
    c = g[..., 1, 0]
    flip = (a < 0) | ((a == 0) & (c < 0))
    return np.where(flip[..., None, None], -g, g)


def same_element(g, h, atol=1e-10):
    """True where ``g`` and ``h`` agree up to sign."""
    d1 = np.abs(g - h).max(axis=(-2, -1))
    d2 = np.abs(g + h).max(axis=(-2, -1))
    return np.minimum(d1, d2) <= atol


def mobius(g, w):
    """Apply ``g`` to upper half-plane points ``w``."""
    w = np.asarray(w, dtype=complex)
    return (g[..., 0, 0] * w + g[..., 0, 1]) / (g[..., 1, 0] * w + g[..., 1, 1])


def base_point(g):
    """Image of ``i``, i.e. the base point of the tangent vector ``g``."""
    a, b, c, d = g[..., 0, 0], g[..., 0, 1], g[..., 1, 0], g[..., 1, 1]
    den = c * c + d * d
    return ((a * c + b * d) + 1j) / den


def cosh_dist_origin(g):
    """``cosh`` of the hyperbolic distance from ``i`` to ``g i``."""
    return 0.5 * np.sum(g * g, axis=(-2, -1))


def rotation(phi):
    """Rotation about ``i`` turning tangent vectors counterclockwise by ``phi``."""
    phi = np.asarray(phi, dtype=float)
    c, s = np.cos(phi / 2), np.sin(phi / 2)
    out = np.empty(phi.shape + (2, 2))
    out[..., 0, 0] = c
    out[..., 0, 1] = s
    out[..., 1, 0] = -s
    out[..., 1, 1] = c
    return out


def diagonal(t):
    """``diag(e^{t/2}, e^{-t/2})``: translation by ``t`` along the imaginary axis."""
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape + (2, 2))
    out[..., 0, 0] = np.exp(t / 2)
    out[..., 1, 1] = np.exp(-t / 2)
    return out


def upper(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros(s.shape + (2, 2))
    out[..., 0, 0] = 1.0
    out[..., 1, 1] = 1.0
    out[..., 0, 1] = s
    return out


def lower(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros(s.shape + (2, 2))
    out[..., 0, 0] = 1.0
    out[..., 1, 1] = 1.0
    out[..., 1, 0] = s
    return out


def lift(w):
    """An affine matrix sending ``i`` to ``w`` with the upward direction kept."""
    w = np.asarray(w, dtype=complex)
    y = np.sqrt(w.imag)
    out = np.zeros(w.shape + (2, 2))
    out[..., 0, 0] = y
    out[..., 0, 1] = w.real / y
    out[..., 1, 1] = 1.0 / y
    return out
