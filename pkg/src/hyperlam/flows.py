"""The right action of PSL(2,R) on the unit tangent bundle.

A unit tangent vector is stored as the group element carrying the reference
vector (upward at ``i`` in the half-plane) to it.  The geodesic, stable and
unstable horocycle flows are right multiplication by

    D_t = diag(e^{t/2}, e^{-t/2}),  H+_t = [[1, t], [0, 1]],  H-_t = [[1, 0], [t, 1]],

and the affine group ``B = {[[a, b], [0, 1/a]] : a > 0}`` is generated by the
geodesic and stable horocycle flows.  Deck transformations act on the left,
so every flow commutes with passing to the quotient.

The stable-leaf coordinates identify ``T^1 D`` with ``D x S^1``: a vector maps
to its base point in the disk and the forward endpoint of its geodesic.  With
the Cayley identification the reference vector has forward endpoint ``1``
(angle ``0``) on the unit circle.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import sl2
from .errors import DegenerateError, DomainError
from .geom import HPoint, halfplane, halfplane_distance, halfplane_to_disk, halfplane_to_polar


class Horocycle(str, Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"


@dataclass(frozen=True)
class UnitTangent:
    """A unit tangent vector represented by a unimodular matrix."""

    rep: np.ndarray

    def __post_init__(self):
        g = np.array(self.rep, dtype=float)
        if g.shape != (2, 2):
            raise ValueError("rep must be a 2x2 matrix")
        if abs(sl2.det(g) - 1) > 1e-8:
            raise DomainError(f"rep has determinant {sl2.det(g)!r}")
        g = sl2.canonical(sl2.renormalize(g))
        g.setflags(write=False)
        object.__setattr__(self, "rep", g)

    @classmethod
    def identity(cls):
        return cls(np.eye(2))

    @classmethod
    def from_point_angle(cls, p, angle):
        """Vector at ``p`` making angle ``angle`` with the real axis of the half-plane chart."""
        g = sl2.lift(p.w) @ sl2.rotation(angle - np.pi / 2)
        return cls(g)

    @property
    def base(self):
        return halfplane(complex(sl2.base_point(self.rep)))

    @property
    def angle(self):
        """Direction in the half-plane chart, in ``[0, 2 pi)``."""
        c, d = self.rep[1]
        return float(np.mod(np.pi / 2 - 2 * np.angle(d + 1j * c), 2 * np.pi))

    def to_point_angle(self):
        return self.base, self.angle

    def close_to(self, other, atol=1e-10):
        return bool(sl2.same_element(self.rep, other.rep, atol=atol))


def geodesic_matrix(t):
    return sl2.diagonal(t)


def horocycle_matrix(t, kind=Horocycle.STABLE):
    kind = Horocycle(kind)
    return sl2.upper(t) if kind is Horocycle.STABLE else sl2.lower(t)


def affine_matrix(a, b):
    if not a > 0:
        raise DomainError("the diagonal entry of an affine element must be positive")
    return np.array([[a, b], [0.0, 1.0 / a]])


def geodesic_flow(u, t):
    return UnitTangent(u.rep @ geodesic_matrix(t))


def horocycle_flow(u, t, kind=Horocycle.STABLE):
    return UnitTangent(u.rep @ horocycle_matrix(t, kind))


def affine_act(u, a, b):
    """Right action of ``[[a, b], [0, 1/a]]``.

    Equal to the geodesic flow for time ``2 log a`` followed by the stable
    horocycle flow for time ``b / a``.
    """
    return UnitTangent(u.rep @ affine_matrix(a, b))


def radial_matrices(x_rep, r, theta):
    """Radial unit vectors at polar position ``(r, theta)`` about ``x_rep . i``.

    ``x_rep`` is any matrix sending ``i`` to the centre; the result does not
    depend on that choice up to the rotation it carries, which is absorbed
    in ``theta``.
    """
    return sl2.mul(x_rep, sl2.mul(sl2.rotation(theta), sl2.diagonal(r)))


def radial_tangent(x, y):
    """Outward unit radial vector at ``y`` for the geodesic from ``x``."""
    xw, yw = x.w, y.w
    if halfplane_distance(xw, yw) < 1e-12:
        raise DegenerateError("radial direction is undefined at the centre")
    gx = sl2.lift(xw)
    local = sl2.mobius(sl2.inverse(gx), yw)
    r, theta = halfplane_to_polar(local)
    return UnitTangent(radial_matrices(gx, float(r), float(theta)))


def leaf_coordinates(g):
    """Vectorized stable-leaf coordinates ``(z, theta)`` of matrices ``g``."""
    z = halfplane_to_disk(sl2.base_point(g))
    theta = np.mod(-2 * np.angle(g[..., 0, 0] + 1j * g[..., 1, 0]), 2 * np.pi)
    return z, theta


def stable_leaf_coordinates(u):
    """Base point in the disk chart and forward endpoint angle of ``u``."""
    z, theta = leaf_coordinates(u.rep)
    return HPoint("disk", complex(z)), float(theta)


def from_leaf_coordinates(z, theta):
    """Matrices with base point ``z`` (disk) and forward endpoint ``e^{i theta}``."""
    z = np.asarray(z, dtype=complex)
    theta = np.asarray(theta, dtype=float)
    w = 1j * (1 + z) / (1 - z)
    # endpoint in homogeneous half-plane coordinates [p : q]
    p = np.cos(theta / 2)
    q = -np.sin(theta / 2)
    phi = 2 * np.arctan2(w.imag * q, w.real * q - p)
    return sl2.mul(sl2.lift(w), sl2.rotation(phi))
