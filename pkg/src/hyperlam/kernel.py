"""Radial heat densities on the hyperbolic plane and the shift estimates.

The Brownian motion here has generator ``Delta / 2``.  The classical closed
form of the heat kernel of the hyperbolic plane is stated for the generator
``Delta``; with ``K(T, r)`` that kernel,

    K(T, r) = sqrt(2) e^{-T/4} / (4 pi T)^{3/2}
              * int_r^inf s e^{-s^2/(4T)} / sqrt(cosh s - cosh r) ds,

the density we need is ``p_t(r) = 2 pi sinh(r) K(t/2, r)``.  The time halving
happens in :func:`_heat_density_panels` and nowhere else.

The substitution ``s = r + w^2`` removes the inverse square-root singularity
at the lower limit for every ``r`` including ``r = 0``; the remaining smooth
integral is done with Gauss-Legendre panels, doubled until the values settle.
"""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import NamedTuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline
from scipy.special import erf

from .errors import DomainError, GridError, QuadratureError


@dataclass
class RadialDensity:
    """Density of the radial process at time ``t`` sampled on an r-grid.

    ``mass`` is the mass the density is meant to carry (1 for probability
    densities, less for path-restricted parts of one).  Construction checks
    that the grid mass lies within ``[mass - eps_mass, mass + eps_mass]``.

    When ``bin_edges`` is given the density is a histogram: ``values[i]`` is
    the constant height on ``[bin_edges[i], bin_edges[i+1])`` and ``grid``
    holds the bin centres.  Otherwise values are point samples integrated by
    the trapezoidal rule.
    """

    t: float
    grid: np.ndarray
    values: np.ndarray
    mass: float = 1.0
    eps_mass: float = 1e-4
    tail_bound: float = 0.0
    bin_edges: np.ndarray = None

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.ndim != 1 or self.grid.shape != self.values.shape:
            raise ValueError("grid and values must be 1-d arrays of equal length")
        if np.any(np.diff(self.grid) <= 0) or self.grid[0] < 0:
            raise GridError("grid must be increasing and start at r >= 0")
        if self.bin_edges is not None:
            self.bin_edges = np.asarray(self.bin_edges, dtype=float)
            if self.bin_edges.shape != (len(self.grid) + 1,) or self.bin_edges[0] < 0:
                raise GridError("bin_edges must have one more entry than grid and start at r >= 0")
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0):
            raise ValueError("density values must be finite and nonnegative")
        m = self.grid_mass()
        if not (self.mass - self.eps_mass <= m <= self.mass + self.eps_mass):
            raise ValueError(f"grid mass {m:.8f} is not within {self.eps_mass} of {self.mass}")

    @classmethod
    def from_samples(cls, t, samples, n_total, bin_width, r_max=None, **kwargs):
        """Histogram density of ``samples`` normalized by ``n_total`` draws.

        The represented mass is ``len(samples) / n_total``; samples beyond
        ``r_max`` are folded into the last bin.
        """
        samples = np.asarray(samples, dtype=float)
        top = float(samples.max()) if samples.size else bin_width
        r_max = max(r_max or 0.0, top)
        n_bins = max(1, int(np.ceil(r_max / bin_width + 1e-12)))
        edges = bin_width * np.arange(n_bins + 1)
        counts = np.bincount(np.minimum((samples / bin_width).astype(int), n_bins - 1), minlength=n_bins)
        values = counts / (n_total * bin_width)
        mass = samples.size / n_total
        kwargs.setdefault("eps_mass", 1e-12)
        return cls(t, (edges[:-1] + edges[1:]) / 2, values, mass=mass, bin_edges=edges, **kwargs)

    def _cumulative(self):
        if self.bin_edges is not None:
            return self.bin_edges, np.concatenate([[0.0], np.cumsum(self.values * np.diff(self.bin_edges))])
        inc = np.diff(self.grid) * (self.values[1:] + self.values[:-1]) / 2
        return self.grid, np.concatenate([[0.0], np.cumsum(inc)])

    def grid_mass(self):
        return float(self._cumulative()[1][-1])

    def trapezoid_mass(self, upto=None):
        if upto is None:
            return self.grid_mass()
        return float(self.cdf(upto))

    def cdf(self, r):
        """Cumulative grid mass at ``r`` (exact for histograms, trapezoidal otherwise)."""
        x, cum = self._cumulative()
        return np.interp(r, x, cum)

    def bin_masses(self, edges):
        return np.diff(self.cdf(np.asarray(edges, dtype=float)))

    def mean(self):
        if self.bin_edges is not None:
            return float(np.sum(self.grid * self.values * np.diff(self.bin_edges)) / self.grid_mass())
        return float(np.trapezoid(self.grid * self.values, self.grid) / self.grid_mass())

    def to_csv(self, path):
        write_density_csv(path, self.grid, self.values)

    @classmethod
    def from_csv(cls, path, t, **kwargs):
        grid, values = read_density_csv(path)
        return cls(t, grid, values, **kwargs)


def write_density_csv(path, grid, values):
    lines = ["r,density"] + [f"{r:.17g},{v:.17g}" for r, v in zip(grid, values)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_density_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]


def binned_l1(a, b, bin_width=0.25):
    """L1 distance between two radial densities after binning both.

    Bins of width ``bin_width`` cover ``[0, r_max)`` where ``r_max`` is the
    larger grid end; mass beyond a density's grid end counts as an extra bin.
    """
    top = max(a.grid[-1] if a.bin_edges is None else a.bin_edges[-1],
              b.grid[-1] if b.bin_edges is None else b.bin_edges[-1])
    edges = bin_width * np.arange(int(np.ceil(top / bin_width + 1e-12)) + 1)
    ma = np.append(a.bin_masses(edges), a.mass - a.cdf(edges[-1]))
    mb = np.append(b.bin_masses(edges), b.mass - b.cdf(edges[-1]))
    return float(np.sum(np.abs(ma - mb)))


def pointwise_l1(a, b):
    """``int |a - b| dr`` on the grid of ``a`` with ``b`` linearly interpolated."""
    vb = np.interp(a.grid, b.grid, b.values, right=0.0)
    return float(np.trapezoid(np.abs(a.values - vb), a.grid))


def default_grid(t):
    """Uniform grid on ``[0, t/2 + 12 sqrt(t) + 10]`` with spacing ``min(0.01, sqrt(t)/400)``."""
    r_max = t / 2 + 12 * np.sqrt(t) + 10
    dr = min(0.01, np.sqrt(t) / 400)
    n = int(np.ceil(r_max / dr))
    return np.linspace(0.0, n * dr, n + 1)


def _log_sinh(x):
    x = np.asarray(x, dtype=float)
    big = x > 20
    out = np.empty_like(x)
    out[big] = x[big] - np.log(2) + np.log1p(-np.exp(-2 * x[big]))
    out[~big] = np.log(np.sinh(x[~big]))
    return out


@lru_cache(maxsize=None)
def _panel_rule(w_max, panels, order):
    x, w = leggauss(order)
    edges = np.linspace(0.0, w_max, panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = ((b - a) / 2 * x + (a + b) / 2).ravel()
    weights = ((b - a) / 2 * w).ravel()
    return nodes, weights


def _heat_density_panels(t, r, panels, order):
    """``p_t(r)`` for generator ``Delta/2`` with a fixed panel rule."""
    T = t / 2  # generator Delta/2 at time t == generator Delta at time t/2
    w_max = np.sqrt(40 * np.sqrt(t) + 40)
    nodes, weights = _panel_rule(float(w_max), panels, order)
    r = r[:, None]
    s = r + nodes**2
    half = nodes**2 / 2
    # cosh s - cosh r = 2 sinh(r + w^2/2) sinh(w^2/2)
    log_f = (
        np.log(s)
        - s**2 / (4 * T)
        + np.log(2 * nodes)
        - 0.5 * (np.log(2) + _log_sinh(r + half) + _log_sinh(half))
    )
    log_pre = 0.5 * np.log(2) - T / 4 - 1.5 * np.log(4 * np.pi * T) + np.log(2 * np.pi)
    out = np.zeros(r.shape[0])
    pos = r[:, 0] > 0
    log_f = log_f[pos] + log_pre + _log_sinh(r[pos])
    out[pos] = np.exp(log_f) @ weights
    return out


def tail_remainder_bound(t, r):
    """Bound on the truncated part of the integral beyond ``s_max = r + 40 sqrt(t) + 40``.

    Uses ``1/sqrt(cosh s - cosh r) <= 1/sqrt(cosh s_max - cosh r)`` and
    ``int_{s_max}^inf s e^{-s^2/(2t)} ds = t e^{-s_max^2/(2t)}``.
    """
    r = np.asarray(r, dtype=float)
    T = t / 2
    s_max = r + 40 * np.sqrt(t) + 40
    dw = s_max - r
    log_den = 0.5 * (np.log(2) + _log_sinh(r + dw / 2) + _log_sinh(dw / 2))
    log_b = (
        0.5 * np.log(2) - T / 4 - 1.5 * np.log(4 * np.pi * T) + np.log(2 * np.pi)
        + np.log(2 * T) - s_max**2 / (4 * T) - log_den
    )
    log_b = log_b + np.where(r > 0, _log_sinh(np.maximum(r, 1e-300)), -np.inf)
    return np.exp(log_b)


def radial_density_exact(t, grid=None, *, order=16, panels=8, max_panels=1024, tol=1e-9, chunk=2048):
    """Radial density ``p_t(r)`` from the closed-form heat kernel.

    The number of panels doubles until no grid value changes by more than
    ``tol``; :class:`QuadratureError` is raised if ``max_panels`` is reached
    first.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    grid = default_grid(t) if grid is None else np.asarray(grid, dtype=float)
    values = np.empty_like(grid)
    for lo in range(0, len(grid), chunk):
        r = grid[lo:lo + chunk]
        n = panels
        prev = _heat_density_panels(t, r, n, order)
        while True:
            n *= 2
            if n > max_panels:
                raise QuadratureError(f"heat kernel quadrature did not settle below {tol} at t={t}")
            cur = _heat_density_panels(t, r, n, order)
            if np.max(np.abs(cur - prev)) < tol:
                break
            prev = cur
        values[lo:lo + chunk] = cur
    tail = float(np.max(tail_remainder_bound(t, grid[grid > 0]) * (grid[-1] - grid[0]))) if len(grid) > 1 else 0.0
    return RadialDensity(t, grid, values, tail_bound=tail)


def gaussian_density(t, y, z):
    """Transition density of ``y + W_t + t/2``."""
    if not t > 0:
        raise DomainError("t must be positive")
    z = np.asarray(z, dtype=float)
    return np.exp(-((z - y - t / 2) ** 2) / (2 * t)) / np.sqrt(2 * np.pi * t)


class TVShift(NamedTuple):
    value: float
    uncertainty: float


def tv_shift(d, s):
    """``int |p_t(r) - p_t(r + s)| dr`` on the grid of ``d``.

    Shifted values come from a cubic spline through the grid values.  The
    reported uncertainty bounds the part of the integral beyond the last grid
    point where both terms are available: twice the mass past it, plus the
    quadrature tail bound carried by ``d``.
    """
    if not 0 <= s <= 1:
        raise DomainError("shift must lie in [0, 1]")
    g = d.grid
    if s >= g[-1] - g[0]:
        raise GridError("shift exceeds the grid coverage")
    if s == 0:
        return TVShift(0.0, 0.0)
    keep = g + s <= g[-1]
    r = g[keep]
    shifted = CubicSpline(g, d.values)(r + s)
    value = float(np.trapezoid(np.abs(d.values[keep] - shifted), r))
    beyond = max(0.0, d.mass - d.trapezoid_mass(upto=r[-1]))
    return TVShift(value, 2 * beyond + d.tail_bound)


def bound_C(R, t):
    """``exp(t / (8 sinh^2(R/2))) / sqrt(1 - e^{-R})``."""
    if not R > 0 or t < 0:
        raise DomainError("need R > 0 and t >= 0")
    return float(np.exp(t / (8 * np.sinh(R / 2) ** 2)) / np.sqrt(-np.expm1(-R)))


class QMode(str, Enum):
    CLOSED_FORM = "closed"
    MONTE_CARLO = "mc"


class Estimate(NamedTuple):
    value: float
    stderr: float


def bound_Q(R, mode=QMode.CLOSED_FORM, **mc_kwargs):
    """``P{ min_r (W_r + r/2) < -R/2 }``.

    The closed form is ``e^{-R/2}``; the Monte Carlo mode simulates the
    drifted walk (see :func:`hyperlam.sde.crossing_probability_mc`).
    """
    if not R > 0:
        raise DomainError("R must be positive")
    if QMode(mode) is QMode.CLOSED_FORM:
        return Estimate(float(np.exp(-R / 2)), 0.0)
    from .sde import crossing_probability_mc

    return crossing_probability_mc([R], **mc_kwargs)[0]


def gaussian_shift_tv(t, s):
    """``int |p*_t(y, z) - p*_t(y, z + s)| dz = 2 (2 Phi(s / (2 sqrt t)) - 1)``."""
    if not t > 0:
        raise DomainError("t must be positive")
    # 2 Phi(x) - 1 = erf(x / sqrt 2), without the cancellation for small x
    return float(2 * erf(abs(s) / (2 * np.sqrt(2 * t))))
