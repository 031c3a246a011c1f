"""Models of the hyperbolic plane and a compact quotient surface.

Three charts are supported for points:

* ``Polar``: geodesic polar coordinates ``(r, theta)`` about the origin, in
  which the metric reads ``ds^2 = dr^2 + sinh(r)^2 dtheta^2``;
* ``Disk``: the Poincare disk, origin at ``0``;
* ``HalfPlane``: the upper half-plane, origin at ``i``.

The identification of the charts is fixed once here: the Cayley map
``w = i (1 + z) / (1 - z)`` takes the disk to the half-plane, and the polar
angle is the disk argument.  Distances are computed in the half-plane, where
the formula has no cancellation near the ideal boundary.

The quotient surface is the genus-2 surface obtained from the regular
hyperbolic octagon with interior angles ``pi/4`` by gluing opposite sides.
"""

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from . import sl2
from .errors import DomainError, IterationCapExceeded


class Chart(str, Enum):
    POLAR = "polar"
    DISK = "disk"
    HALFPLANE = "halfplane"


def disk_to_halfplane(z):
    z = np.asarray(z, dtype=complex)
    return 1j * (1 + z) / (1 - z)


def halfplane_to_disk(w):
    w = np.asarray(w, dtype=complex)
    return (w - 1j) / (w + 1j)


def polar_to_halfplane(r, theta):
    g = sl2.mul(sl2.rotation(theta), sl2.diagonal(r))
    return sl2.base_point(g)


def halfplane_to_polar(w):
    w = np.asarray(w, dtype=complex)
    r = halfplane_distance(1j, w)
    theta = np.mod(np.angle(w - 1j) - np.angle(w + 1j), 2 * np.pi)
    return r, np.where(r == 0, 0.0, theta)


def halfplane_distance(w1, w2):
    """Hyperbolic distance between upper half-plane points (vectorized)."""
    w1 = np.asarray(w1, dtype=complex)
    w2 = np.asarray(w2, dtype=complex)
    return 2 * np.arcsinh(np.abs(w1 - w2) / (2 * np.sqrt(w1.imag * w2.imag)))


def disk_distance(z1, z2):
    return halfplane_distance(disk_to_halfplane(z1), disk_to_halfplane(z2))


@dataclass(frozen=True)
class HPoint:
    """A point of the hyperbolic plane stored in one chart.

    ``coords`` is a pair ``(r, theta)`` for the polar chart and a complex
    number for the disk and half-plane charts.  Use the constructors
    :func:`polar`, :func:`disk`, :func:`halfplane` and :func:`origin`.
    """

    chart: Chart
    coords: object

    def __post_init__(self):
        chart = Chart(self.chart)
        object.__setattr__(self, "chart", chart)
        if chart is Chart.POLAR:
            r, theta = self.coords
            r, theta = float(r), float(theta)
            if not (np.isfinite(r) and r >= 0 and np.isfinite(theta)):
                raise DomainError(f"invalid polar coordinates {self.coords!r}")
            object.__setattr__(self, "coords", (r, theta % (2 * np.pi)))
        elif chart is Chart.DISK:
            z = complex(self.coords)
            if not abs(z) < 1:
                raise DomainError(f"disk point {z!r} is not inside the unit disk")
            object.__setattr__(self, "coords", z)
        else:
            w = complex(self.coords)
            if not (w.imag > 0 and np.isfinite(w.real) and np.isfinite(w.imag)):
                raise DomainError(f"half-plane point {w!r} has non-positive imaginary part")
            object.__setattr__(self, "coords", w)

    def to_halfplane(self):
        if self.chart is Chart.HALFPLANE:
            return self
        if self.chart is Chart.DISK:
            return HPoint(Chart.HALFPLANE, complex(disk_to_halfplane(self.coords)))
        r, theta = self.coords
        return HPoint(Chart.HALFPLANE, complex(polar_to_halfplane(r, theta)))

    def to_disk(self):
        if self.chart is Chart.DISK:
            return self
        if self.chart is Chart.POLAR:
            r, theta = self.coords
            return HPoint(Chart.DISK, np.tanh(r / 2) * np.exp(1j * theta))
        return HPoint(Chart.DISK, complex(halfplane_to_disk(self.coords)))

    def to_polar(self):
        if self.chart is Chart.POLAR:
            return self
        if self.chart is Chart.DISK:
            z = self.coords
            return HPoint(Chart.POLAR, (2 * np.arctanh(abs(z)), np.angle(z)))
        r, theta = halfplane_to_polar(self.coords)
        return HPoint(Chart.POLAR, (float(r), float(theta)))

    def convert(self, chart):
        chart = Chart(chart)
        if chart is Chart.POLAR:
            return self.to_polar()
        if chart is Chart.DISK:
            return self.to_disk()
        return self.to_halfplane()

    @property
    def w(self):
        """Upper half-plane coordinate."""
        return self.to_halfplane().coords


def polar(r, theta):
    return HPoint(Chart.POLAR, (r, theta))


def disk(z):
    return HPoint(Chart.DISK, z)


def halfplane(w):
    return HPoint(Chart.HALFPLANE, w)


def origin():
    return HPoint(Chart.HALFPLANE, 1j)


def distance(a, b):
    """Hyperbolic distance between two points given in any charts."""
    if a.chart is Chart.POLAR and b.chart is Chart.POLAR and (a.coords[0] == 0 or b.coords[0] == 0):
        return max(a.coords[0], b.coords[0])
    return float(halfplane_distance(a.w, b.w))


def circle_length(r):
    """Length ``2 pi sinh(r)`` of a hyperbolic circle of radius ``r``."""
    if r < 0:
        raise DomainError("radius must be nonnegative")
    return 2 * np.pi * np.sinh(r)


@dataclass
class FuchsianGroup:
    """A cocompact Fuchsian group given by side-pairing generators.

    Parameters
    ----------
    generators : array of shape (k, 2, 2)
        Generators together with their inverses, as unimodular matrices
        acting on the upper half-plane.
    domain_radius : float
        Largest distance from the origin of a point of the Dirichlet domain
        (its circumradius).  Reduced points never lie farther out.
    inradius : float, optional
        Distance from the origin to the nearest side.
    max_iter : int
        Cap on descent steps per point.
    """

    generators: np.ndarray
    domain_radius: float
    inradius: float = None
    max_iter: int = 1000
    _neighbor_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        g = sl2.as_stack(self.generators)
        if g.ndim != 3:
            raise ValueError("generators must have shape (k, 2, 2)")
        bad = np.abs(sl2.det(g) - 1) > 1e-12
        if bad.any():
            raise DomainError(f"generators {np.flatnonzero(bad).tolist()} are not unimodular")
        self.generators = sl2.renormalize(g)
        if not self.domain_radius > 0:
            raise DomainError("domain_radius must be positive")

    @classmethod
    def from_file(cls, path, domain_radius=None, **kwargs):
        """Load generators from a text file (``a b c d`` per line, ``#`` comments).

        Inverses missing from the file are appended.  When ``domain_radius`` is
        omitted it is estimated by reducing a cloud of random points.
        """
        rows = []
        for line in Path(path).read_text().splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            vals = [float(v) for v in line.split()]
            if len(vals) != 4:
                raise ValueError(f"expected four numbers per generator line, got {line!r}")
            rows.append(np.array(vals).reshape(2, 2))
        gens = list(rows)
        for g in rows:
            gi = sl2.inverse(g)
            if not any(sl2.same_element(gi, h, atol=1e-9) for h in gens):
                gens.append(gi)
        group = cls(np.array(gens), domain_radius or 1.0, **kwargs)
        if domain_radius is None:
            rng = np.random.default_rng(0)
            pts = sl2.mul(sl2.rotation(rng.uniform(0, 2 * np.pi, 4096)), sl2.diagonal(rng.uniform(0, 6, 4096)))
            red, _ = group.reduce_matrices(pts)
            group.domain_radius = float(np.arccosh(sl2.cosh_dist_origin(red).max())) * (1 + 1e-6)
        return group

    def to_file(self, path):
        lines = ["# generators a b c d (row-major), one per line"]
        lines += [" ".join(f"{v:.17g}" for v in g.ravel()) for g in self.generators]
        Path(path).write_text("\n".join(lines) + "\n")

    def reduce_matrices(self, g, track=False):
        """Left-multiply matrices by group elements until their base points are reduced.

        Greedy descent: at each step the generator that brings the base point
        closest to the origin is applied, ties going to the lowest index.
        Returns the reduced matrices and, if ``track``, the accumulated group
        elements ``gamma`` with ``gamma @ g`` equal to the result.
        """
        g = sl2.as_stack(g).copy()
        squeeze = g.ndim == 2
        g = g.reshape(-1, 2, 2)
        acc = sl2.identity(len(g)) if track else None
        gens = self.generators
        active = np.arange(len(g))
        for _ in range(self.max_iter):
            if active.size == 0:
                break
            sub = g[active]
            cur = sl2.cosh_dist_origin(sub)
            cand = np.einsum("kab,nbc->nkac", gens, sub)
            cw = sl2.cosh_dist_origin(cand)
            j = np.argmin(cw, axis=1)
            best = cw[np.arange(len(sub)), j]
            move = best < cur * (1 - 1e-12)
            idx = active[move]
            g[idx] = sl2.renormalize(cand[move, j[move]])
            if track:
                acc[idx] = sl2.mul(gens[j[move]], acc[idx])
            active = idx
        if active.size:
            raise IterationCapExceeded(
                f"{active.size} points still descending after {self.max_iter} steps"
            )
        g = sl2.canonical(g)
        if squeeze:
            g = g[0]
            acc = acc[0] if track else None
        return g, acc

    def reduce_to_domain(self, p):
        """Reduce a point to the Dirichlet domain about the origin.

        Returns ``(q, gamma)`` with ``gamma . p = q`` under the Mobius action.
        """
        g = sl2.lift(p.w)
        red, gamma = self.reduce_matrices(g, track=True)
        q = halfplane(complex(sl2.base_point(red)))
        return q.convert(p.chart), sl2.canonical(gamma)

    def neighbors(self, radius):
        """All group elements moving the origin by at most ``radius``.

        Found by breadth-first search over words; elements are kept up to sign.
        Tiles crossed by the geodesic from the origin to ``gamma . o`` have
        centres within ``d + domain_radius``, so the search stops there.
        """
        key = round(float(radius), 12)
        if key in self._neighbor_cache:
            return self._neighbor_cache[key]
        limit = np.cosh(radius + self.domain_radius + 1e-6)

        def hkey(m):
            return tuple(np.rint(m.ravel() * 1e6).astype(np.int64))

        found = [np.eye(2)]
        seen = {hkey(found[0])}
        frontier = [np.eye(2)]
        while frontier:
            cand = np.einsum("nab,kbc->nkac", np.array(frontier), self.generators).reshape(-1, 2, 2)
            cand = sl2.canonical(cand[sl2.cosh_dist_origin(cand) <= limit])
            new = []
            for h in cand:
                k = hkey(h)
                if k not in seen:
                    seen.add(k)
                    new.append(h)
            found.extend(new)
            frontier = new
        found = np.array(found)
        keep = sl2.cosh_dist_origin(found) <= np.cosh(radius)
        out = sl2.canonical(found[keep])
        # the sign choice is unstable when the corner entry is near 0
        uniq = [i for i in range(len(out)) if not sl2.same_element(out[:i], out[i], atol=1e-8).any()]
        out = out[uniq]
        out = out[np.argsort(sl2.cosh_dist_origin(out), kind="stable")]
        self._neighbor_cache[key] = out
        return out


def octagon_group():
    """Side pairings of the regular octagon with angles ``pi/4`` (genus two).

    Generator ``k`` translates along the diameter at angle ``k pi / 4`` by
    twice the inradius; generator ``k + 4`` is its inverse.
    """
    inradius = float(np.arccosh(1 + np.sqrt(2)))
    circumradius = float(np.arccosh((1 + np.sqrt(2)) ** 2))
    gens = []
    for k in range(8):
        rot = sl2.rotation(k * np.pi / 4)
        gens.append(rot @ sl2.diagonal(2 * inradius) @ sl2.inverse(rot))
    return FuchsianGroup(np.array(gens), circumradius, inradius=inradius)
