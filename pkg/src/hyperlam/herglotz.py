"""Poisson-kernel measures on the disk and their boundary data.

The kernel is normalized so that it integrates to one in ``theta``,

    k(z, theta) = (1 / 2 pi) (1 - |z|^2) / |z - e^{i theta}|^2,

and the harmonic extension of a boundary measure ``phi`` is
``h(z) = int k(z, theta) dphi(theta)``.  The Lebesgue measure ``dtheta``
(mass ``2 pi``) therefore extends to ``h = 1``, and ``h(0)`` is the mass of
``phi`` divided by ``2 pi``.

A flow-box measure on ``U x S^1`` is ``k(z, theta) dA(z) dphi(theta)`` with
``dA = 4 dx dy / (1 - |z|^2)^2`` the hyperbolic area.  Under the leaf
coordinates of :mod:`hyperlam.flows`, each plaque ``U x {theta}`` is an open
piece of an orbit of the affine group and ``k(., theta) dA`` is the invariant
measure on it, so the flow-box measure is invariant under small affine
elements.
"""

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.optimize import nnls

from . import sl2
from .errors import DomainError, IllConditionedError, SupportError
from .flows import affine_matrix, from_leaf_coordinates
from .geom import disk_distance, halfplane_to_disk

TWO_PI = 2 * np.pi


def poisson_kernel(z, theta):
    """Normalized Poisson kernel of the unit disk (vectorized)."""
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) >= 1):
        raise DomainError("Poisson kernel needs |z| < 1")
    return (1 - np.abs(z) ** 2) / np.abs(z - np.exp(1j * np.asarray(theta, dtype=float))) ** 2 / TWO_PI


class Representation(str, Enum):
    ATOMS = "atoms"
    GRID = "grid"


@dataclass
class BoundaryMeasure:
    """A finite positive measure on the circle.

    ``ATOMS``: masses ``values`` at angles ``theta``.  ``GRID``: density
    ``values`` (per unit angle) on the uniform grid ``theta_j = 2 pi j / G``,
    integrated by the periodic trapezoidal rule.
    """

    repr: Representation
    theta: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.repr = Representation(self.repr)
        self.theta = np.mod(np.asarray(self.theta, dtype=float), TWO_PI)
        self.values = np.asarray(self.values, dtype=float)
        if self.theta.shape != self.values.shape or self.theta.ndim != 1:
            raise ValueError("theta and values must be 1-d arrays of equal length")
        if self.repr is Representation.ATOMS and np.any(self.values <= 0):
            raise ValueError("atom masses must be positive")
        if self.repr is Representation.GRID:
            if np.any(self.values < 0):
                raise ValueError("grid densities must be nonnegative")
            g = len(self.theta)
            if not np.allclose(self.theta, TWO_PI * np.arange(g) / g, atol=1e-12):
                raise ValueError("grid densities live on theta_j = 2 pi j / G")

    @classmethod
    def atoms(cls, theta, masses):
        return cls(Representation.ATOMS, np.atleast_1d(theta), np.atleast_1d(masses))

    @classmethod
    def grid(cls, density):
        density = np.asarray(density, dtype=float)
        return cls(Representation.GRID, TWO_PI * np.arange(len(density)) / len(density), density)

    @classmethod
    def uniform(cls, grid_size=256, mass=TWO_PI):
        """Constant density with the given total mass (default: Lebesgue ``dtheta``)."""
        return cls.grid(np.full(grid_size, mass / TWO_PI))

    @property
    def weights(self):
        """Quadrature masses at ``theta``."""
        if self.repr is Representation.ATOMS:
            return self.values
        return self.values * TWO_PI / len(self.values)

    @property
    def total_mass(self):
        return float(self.weights.sum())

    def to_csv(self, path):
        col = "mass" if self.repr is Representation.ATOMS else "density"
        lines = [f"theta,{col}"] + [f"{t:.17g},{v:.17g}" for t, v in zip(self.theta, self.values)]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path):
        text = Path(path).read_text().splitlines()
        kind = Representation.ATOMS if text[0].strip().endswith("mass") else Representation.GRID
        data = np.loadtxt(text[1:], delimiter=",", ndmin=2)
        return cls(kind, data[:, 0], data[:, 1])


def harmonic_extension(m, z):
    """``h(z) = int k(z, theta) dm(theta)`` (vectorized in ``z``)."""
    z = np.asarray(z, dtype=complex)
    return np.tensordot(poisson_kernel(z[..., None], m.theta), m.weights, axes=([-1], [0]))


def circle_w1(a, b):
    """Wasserstein-1 distance between two measures on the circle (arc-length cost).

    Both are treated as atoms at their quadrature nodes.  With ``F`` the
    cumulative difference, ``W1 = min_c int |F - c| dtheta``; the minimizing
    ``c`` is a weighted median of ``F``.  The masses are expected to agree.
    """
    t = np.concatenate([a.theta, b.theta])
    m = np.concatenate([a.weights, -b.weights])
    order = np.argsort(t, kind="stable")
    t, m = t[order], m[order]
    F = np.cumsum(m)
    arcs = np.append(np.diff(t), TWO_PI - t[-1] + t[0])
    o = np.argsort(F, kind="stable")
    cw = np.cumsum(arcs[o])
    c = F[o][np.searchsorted(cw, cw[-1] / 2)]
    return float(np.sum(arcs * np.abs(F - c)))


@dataclass
class Recovery:
    measure: BoundaryMeasure
    residual: float
    condition: float
    n_samples: int

    def to_csv(self, path):
        lines = ["stat,value", f"residual,{self.residual:.17g}", f"condition,{self.condition:.17g}",
                 f"n_samples,{self.n_samples}", f"grid_size,{len(self.measure.theta)}",
                 f"mass,{self.measure.total_mass:.17g}"]
        Path(path).write_text("\n".join(lines) + "\n")


def recover_boundary_measure(z, h, grid_size=256, cond_cap=1e13):
    """Nonnegative least-squares fit of a grid measure to harmonic values ``h`` at ``z``.

    The unknowns are the masses at the grid nodes, so the design matrix is
    ``A_ij = k(z_i, theta_j)``.  The condition number is the ratio of extreme
    nonzero singular values of ``A``; :class:`IllConditionedError` is raised
    when it exceeds ``cond_cap``.
    """
    z = np.asarray(z, dtype=complex).ravel()
    h = np.asarray(h, dtype=float).ravel()
    if z.shape != h.shape:
        raise ValueError("one value per sample point is required")
    if np.any(h < 0):
        raise DomainError("harmonic values of a positive measure are nonnegative")
    if len(np.unique(np.round(z, 14))) != len(z):
        raise DomainError("sample points must be distinct")
    theta = TWO_PI * np.arange(grid_size) / grid_size
    A = poisson_kernel(z[:, None], theta[None, :])
    s = np.linalg.svd(A, compute_uv=False)
    cond = float(s[0] / s[-1]) if s[-1] > 0 else np.inf
    if cond > cond_cap:
        raise IllConditionedError(f"design matrix condition {cond:.3e} exceeds the cap {cond_cap:.3e}")
    masses, residual = nnls(A, h, maxiter=50 * grid_size)
    return Recovery(BoundaryMeasure.grid(masses * grid_size / TWO_PI), float(residual), cond, len(z))


def sample_circles(radii, per_circle, center=0j):
    """``per_circle`` points on each circle about ``center``, staggered between circles."""
    pts = []
    for i, r in enumerate(radii):
        ang = TWO_PI * (np.arange(per_circle) + 0.5 * i) / per_circle
        pts.append(center + r * np.exp(1j * ang))
    return np.concatenate(pts)


def hyperbolic_area_density(z):
    return 4 / (1 - np.abs(z) ** 2) ** 2


def _ball_in_disk(zc, r):
    """Euclidean centre and radius of the hyperbolic ball ``B(zc, r)`` in the disk."""
    rho = abs(zc)
    t = np.tanh(r / 2)
    if rho == 0:
        return 0j, t
    a, b = np.tanh(np.arctanh(rho) - r / 2), np.tanh(np.arctanh(rho) + r / 2)
    u = zc / rho
    return u * (a + b) / 2, (b - a) / 2


@dataclass(frozen=True)
class FlowBoxTest:
    """``f(z, theta) = W(d(z, center) / radius) (1 + amp cos(k theta + phase))`` on ``U x S^1``."""

    center: complex
    radius: float
    harmonic: int = 0
    phase: float = 0.0
    amp: float = 0.5
    id: str = ""

    def __call__(self, z, theta):
        from .measures import wendland

        q = disk_distance(z, self.center) / self.radius
        return wendland(q) * (1 + self.amp * np.cos(self.harmonic * theta + self.phase))


def flow_box_battery():
    return [
        FlowBoxTest(0j, 0.6, 0, 0.0, 0.0, "f0"),
        FlowBoxTest(0.08 + 0.05j, 0.5, 1, 0.3, 0.5, "f1"),
        FlowBoxTest(-0.06 + 0.07j, 0.5, 2, 1.1, 0.5, "f2"),
        FlowBoxTest(0.03 - 0.09j, 0.45, 3, 2.0, 0.5, "f3"),
    ]


@dataclass
class FlowBoxMeasure:
    """``k(z, theta) dA(z) dphi(theta)`` on ``U x S^1`` with ``U`` a Euclidean disk in ``D``.

    ``perturbation`` multiplies the density by ``1 + perturbation * Re z``,
    which breaks the affine invariance; it serves as a negative control.
    """

    center: complex
    radius: float
    boundary: BoundaryMeasure
    perturbation: float = 0.0

    def __post_init__(self):
        if not (self.radius > 0 and abs(self.center) + self.radius < 1):
            raise DomainError("U must be a disk inside the unit disk")

    def density(self, z, theta):
        d = poisson_kernel(z, theta) * hyperbolic_area_density(z)
        if self.perturbation:
            d = d * (1 + self.perturbation * np.real(z))
        return d

    def nodes(self, n):
        """Polar midpoint nodes in ``U`` with Euclidean area weights (``n`` radii by ``n`` angles)."""
        r = (np.arange(n) + 0.5) * self.radius / n
        a = TWO_PI * np.arange(n) / n
        z = self.center + (r[:, None] * np.exp(1j * a[None, :])).ravel()
        w = np.repeat(r * (self.radius / n) * (TWO_PI / n), n)
        return z, w

    def theta_nodes(self, n_theta):
        if self.boundary.repr is Representation.ATOMS:
            return self.boundary.theta, self.boundary.weights
        # resample a grid density periodically onto n_theta nodes
        th = TWO_PI * np.arange(n_theta) / n_theta
        g = self.boundary.theta
        vals = np.interp(th, np.append(g, TWO_PI), np.append(self.boundary.values, self.boundary.values[0]))
        return th, vals * TWO_PI / n_theta

    def integrate(self, f, n=256, n_theta=64, transform=None):
        """``int f(z, theta) dnu`` (or of ``f o transform``) by tensor quadrature."""
        z, wz = self.nodes(n)
        th, wt = self.theta_nodes(n_theta)
        total = 0.0
        for t, w in zip(th, wt):
            zz = z if transform is None else transform(z, t)
            total += w * np.sum(f(zz, t) * self.density(z, t) * wz)
        return float(total)

    def integrate_base(self, f, center, radius, n=128):
        """``int f(z) h(z) dA(z)`` for ``f`` supported in the hyperbolic ball ``B(center, radius)``.

        ``h`` is the (perturbed) fibre integral of the density.  Quadrature is
        in geodesic polar coordinates about ``center``: Gauss-Legendre in the
        radius, trapezoidal in the angle.
        """
        x, wq = np.polynomial.legendre.leggauss(n)
        r = (x + 1) * radius / 2
        a = TWO_PI * np.arange(n) / n
        local = (np.tanh(r / 2)[:, None] * np.exp(1j * a[None, :])).ravel()
        z = (local + center) / (1 + np.conj(center) * local)
        w = np.repeat(np.sinh(r) * wq * radius / 2 * (TWO_PI / n), n)
        h = harmonic_extension(self.boundary, z)
        if self.perturbation:
            h = h * (1 + self.perturbation * np.real(z))
        return float(np.sum(f(z) * h * w))

    def check_support(self, f, a, b):
        """Raise :class:`SupportError` unless ``f`` and ``f o A`` are supported in ``U``."""
        delta = float(np.arccosh(sl2.cosh_dist_origin(affine_matrix(a, b))))
        c, rad = _ball_in_disk(complex(f.center), f.radius + delta)
        if abs(c - self.center) + rad >= self.radius:
            raise SupportError(f"test function {f.id or f} leaves U under the affine element ({a}, {b})")


def affine_transform(a, b):
    """``(z, theta) -> z'`` where ``(z', theta)`` are the leaf coordinates of ``u A``."""
    A = affine_matrix(a, b)
    w_a = complex(sl2.mobius(A, 1j))

    def move(z, theta):
        u = from_leaf_coordinates(z, np.full(np.shape(z), theta))
        return halfplane_to_disk(sl2.mobius(u, w_a))

    return move


def affine_conditional_check(fb, a, b, fs, n=256, n_theta=64):
    """``|int f o A dnu - int f dnu|`` for each flow-box test function."""
    for f in fs:
        fb.check_support(f, a, b)
    if a == 1 and b == 0:
        return [0.0 for _ in fs]
    move = affine_transform(a, b)
    return [abs(fb.integrate(f, n, n_theta, transform=move) - fb.integrate(f, n, n_theta)) for f in fs]


def normalized_bump(center, width, weight_fn=None):
    """Wendland bump in the hyperbolic distance to ``center`` with unit hyperbolic area integral."""
    from .measures import wendland

    # int_0^w W(r/w) sinh r dr, by Gauss-Legendre on [0, w]
    x, wq = np.polynomial.legendre.leggauss(64)
    r = (x + 1) * width / 2
    norm = TWO_PI * np.sum(wq * width / 2 * wendland(r / width) * np.sinh(r))

    def f(z):
        return wendland(disk_distance(z, center) / width) / norm

    return f


@dataclass
class MollifiedValues:
    widths: np.ndarray
    values: np.ndarray
    extrapolated: float


def mollified_point_values(G, z0, widths, n=128):
    """Values of ``G`` on unit-mass bumps of decreasing widths about ``z0``.

    ``G`` is a :class:`FlowBoxMeasure` (its base functional is used) or any
    callable ``G(f, center, radius)``.  The extrapolated value assumes an
    error ``c w^2`` and combines the two narrowest widths; with a single width
    it is that value.
    """
    widths = np.asarray(widths, dtype=float)
    if np.any(widths <= 0) or np.any(np.diff(widths) >= 0):
        raise DomainError("widths must be positive and decreasing")
    func = G.integrate_base if isinstance(G, FlowBoxMeasure) else G
    if isinstance(G, FlowBoxMeasure):
        c, rad = _ball_in_disk(complex(z0), widths[0])
        if abs(c - G.center) + rad >= G.radius:
            raise SupportError("the widest bump is not supported in U")
    vals = np.array([func(normalized_bump(z0, w), z0, w) if not isinstance(G, FlowBoxMeasure)
                     else func(normalized_bump(z0, w), z0, w, n) for w in widths])
    if len(widths) == 1:
        return MollifiedValues(widths, vals, float(vals[0]))
    w1, w2 = widths[-2] ** 2, widths[-1] ** 2
    extra = (w1 * vals[-1] - w2 * vals[-2]) / (w1 - w2)
    return MollifiedValues(widths, vals, float(extra))
