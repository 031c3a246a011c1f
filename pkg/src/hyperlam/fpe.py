"""Finite-volume solver for the forward equation of the radial process.

Solves ``dp/dt = (1/2) p'' - (coth(y)/2 p)'`` on ``[y_min, y_max]`` with cell
averages.  The face flux uses exponential fitting (Scharfetter-Gummel, the
Chang-Cooper weighting for a constant diffusion),

    F_{i+1/2} = (D / dy) (B(-Pe) p_i - B(Pe) p_{i+1}),  Pe = b dy / D,  B(x) = x / (e^x - 1),

with ``D = 1/2`` and ``b = coth(y)/2`` at the face.  The flux through ``y_min``
is zero; at ``y_max`` only the upwind outflow ``(D/dy) B(-Pe) p_N`` is kept and
accumulated.  Time stepping is backward Euler, one tridiagonal solve per step.
The first steps after a point-mass start are ramped up geometrically.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import solve_banded

from .errors import DomainError, MassError, StabilityError
from .kernel import RadialDensity, default_grid


def bernoulli(x):
    """``x / (e^x - 1)`` with its limit 1 at 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, x)
    return np.where(small, 1 - x / 2, safe / np.expm1(safe))


@dataclass
class FPGrid:
    """Cell-averaged density on ``n_cells`` uniform cells of ``[y_min, y_max]``."""

    y_min: float
    y_max: float
    n_cells: int
    dt: float
    values: np.ndarray
    t: float = 0.0
    outflow: float = 0.0

    def __post_init__(self):
        if not (0 <= self.y_min < self.y_max):
            raise DomainError("need 0 <= y_min < y_max")
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.n_cells,):
            raise ValueError("values must have one entry per cell")

    @property
    def dy(self):
        return (self.y_max - self.y_min) / self.n_cells

    @property
    def faces(self):
        return np.linspace(self.y_min, self.y_max, self.n_cells + 1)

    @property
    def centers(self):
        return self.y_min + (np.arange(self.n_cells) + 0.5) * self.dy

    @property
    def mass(self):
        return float(self.values.sum() * self.dy)

    @classmethod
    def point_mass(cls, y0, y_max, n_cells=8000, dt=1e-3, y_min=0.0):
        """Unit mass in the cell containing ``y0``."""
        g = cls(y_min, y_max, n_cells, dt, np.zeros(n_cells))
        i = min(int((y0 - y_min) / g.dy), n_cells - 1)
        g.values[i] = 1 / g.dy
        return g

    @classmethod
    def gaussian(cls, mean, sd, y_max, n_cells=8000, dt=1e-3, y_min=0.0):
        """Cell averages of a normal density, renormalized on the grid."""
        from scipy.special import ndtr

        g = cls(y_min, y_max, n_cells, dt, np.zeros(n_cells))
        cdf = ndtr((g.faces - mean) / sd)
        g.values = np.diff(cdf) / g.dy
        g.values /= g.mass
        return g

    def to_density(self, eps_mass=1e-6):
        """Histogram :class:`RadialDensity` of the surviving mass."""
        if self.y_min != 0:
            raise DomainError("only grids starting at 0 convert to radial densities")
        return RadialDensity(self.t, self.centers, np.maximum(self.values, 0.0), mass=1.0 - self.outflow,
                             eps_mass=eps_mass, bin_edges=self.faces)


def _operator(grid):
    """Banded backward-Euler pieces: rows of ``dp/dt = -A p`` and the outflow coefficient."""
    n, dy = grid.n_cells, grid.dy
    diff = 0.5
    yf = grid.faces[1:]
    pe = (0.5 / np.tanh(yf)) * dy / diff
    bm, bp = bernoulli(-pe), bernoulli(pe)
    bp[-1] = 0.0  # nothing flows back in through y_max
    c = diff / dy**2
    diag = c * bm
    diag[1:] += c * bp[:-1]
    upper = -c * bp[:-1]
    lower = -c * bm[:-1]
    return diag, upper, lower, diff / dy * bm[-1]


def fp_evolve(initial, t_end, ramp=None, mass_tol=1e-6, step_tol=1e-8):
    """Evolve ``initial`` for a further time ``t_end``.

    ``ramp`` (default: on when ``initial.t == 0``) shortens the first steps to
    ``max(1e-6, 0.1 t)`` so that a point-mass start is resolved.  Raises
    :class:`StabilityError` for a non-positive or non-finite step and if the
    solution develops negative values, :class:`MassError` if the mass balance
    (cells plus outflow) drifts by more than ``mass_tol`` in total or
    ``step_tol`` in one step.
    """
    if not (np.isfinite(initial.dt) and initial.dt > 0):
        raise StabilityError(f"time step {initial.dt!r} is not a positive finite number")
    if t_end < 0:
        raise DomainError("t_end must be nonnegative")
    if t_end == 0:
        return replace(initial, values=initial.values.copy())
    ramp = initial.t == 0 if ramp is None else ramp
    diag, upper, lower, out_coef = _operator(initial)
    n, dy, dt = initial.n_cells, initial.dy, initial.dt
    p = initial.values.copy()
    start_balance = initial.mass + initial.outflow
    outflow = initial.outflow
    elapsed = 0.0
    ab = np.zeros((3, n))
    while elapsed < t_end - 1e-14:
        h = min(dt, t_end - elapsed)
        if ramp and initial.t + elapsed < dt:
            h = min(h, max(1e-6, 0.1 * (initial.t + elapsed)))
        ab[0, 1:] = h * upper
        ab[1] = 1 + h * diag
        ab[2, :-1] = h * lower
        before = p.sum() * dy
        p = solve_banded((1, 1), ab, p)
        if not np.all(np.isfinite(p)) or p.min() < -1e-14 * p.max():
            raise StabilityError("negative or non-finite density after a step")
        step_out = h * out_coef * p[-1]
        outflow += step_out
        if abs(p.sum() * dy + step_out - before) > step_tol:
            raise MassError("mass not conserved within one step")
        elapsed += h
    if abs(p.sum() * dy + outflow - start_balance) > mass_tol:
        raise MassError(f"cumulative mass drift {p.sum() * dy + outflow - start_balance:.3e}")
    return replace(initial, values=p, t=initial.t + t_end, outflow=outflow)


def domain_end(t):
    """Right end of the computational domain for time ``t``, as for the kernel grid."""
    return float(default_grid(t)[-1])


def fp_density_from_origin(t_end, n_cells=8000, dt=1e-3, y0=0.01):
    """Density of the radial process at ``t_end`` started from a point mass at ``y0``."""
    if not t_end > 0:
        raise DomainError("t_end must be positive")
    g = FPGrid.point_mass(y0, domain_end(t_end), n_cells, dt)
    return fp_evolve(g, t_end).to_density()
