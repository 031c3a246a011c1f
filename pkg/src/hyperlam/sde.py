"""Simulation of the radial hyperbolic Brownian motion and its companions.

The radial process solves ``dX = dW + coth(X)/2 dt``.  Its drift flow is
explicit, ``cosh X(t) = cosh X(0) e^{t/2}``, so each step is a Strang split:
exact drift for ``h/2``, the Wiener increment, exact drift for ``h/2``.  The
drift half-steps work with ``cosh X - 1 = 2 sinh^2(X/2)`` to keep full relative
precision near the origin.  After the Wiener increment a value below the floor
``h`` is reflected back above it.

Random numbers come from Philox streams keyed by ``(seed, block, stream)``.
Paths are simulated in fixed blocks of ``BLOCK`` paths, each block drawing its
own increments, so an ensemble is the same for any number of worker threads.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import NamedTuple
import os

import numpy as np

from .errors import DomainError, StepError
from .kernel import Estimate, RadialDensity

BLOCK = 8192

# stream indices within a block
_RADIAL, _ANGULAR, _DIRECTION = 0, 1, 2


class Noise(str, Enum):
    WIENER = "wiener"
    ZERO = "zero"


def block_rng(seed, block, stream=_RADIAL):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(block), int(stream)])))


def default_threads():
    return os.cpu_count() or 1


def map_blocks(fn, n_paths, threads=None, block=BLOCK):
    """Apply ``fn(block_index, start, size)`` over path blocks, results in block order."""
    if n_paths < 0:
        raise DomainError("n_paths must be nonnegative")
    jobs = [(b, s, min(block, n_paths - s)) for b, s in enumerate(range(0, n_paths, block))]
    threads = threads or default_threads()
    if threads == 1 or len(jobs) <= 1:
        return [fn(*j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda j: fn(*j), jobs))


def n_steps_for(t_end, h):
    """Number of steps of size close to ``h`` covering ``[0, t_end]``; the step is then ``t_end / n``."""
    if not h > 0:
        raise DomainError("step h must be positive")
    if t_end < 0:
        raise DomainError("t_end must be nonnegative")
    return int(np.ceil(t_end / h - 1e-9)) if t_end > 0 else 0


def drift_flow(x, tau):
    """Exact solution of ``dX = coth(X)/2 dt`` after time ``tau``."""
    c = 2 * np.sinh(x / 2) ** 2
    c = c * np.exp(tau / 2) + np.expm1(tau / 2)
    return 2 * np.arcsinh(np.sqrt(c / 2))


def radial_step(x, dw, h, floor):
    x = drift_flow(x, h / 2)
    x = x + dw
    x = np.where(x < floor, 2 * floor - x, x)
    return drift_flow(x, h / 2)


def _check_state(x):
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise StepError("radius left (0, inf) after the reflection safeguard; reduce h")


class PathKind(str, Enum):
    RADIAL = "radial"
    PLANAR = "planar"
    WIENER = "wiener"


@dataclass
class PathSample:
    """One discretized trajectory on the uniform time grid ``times``.

    For radial and planar paths ``x`` is the radius and ``w`` the driving
    Wiener path; for Wiener paths ``x`` is ``y + W`` itself.
    """

    times: np.ndarray
    x: np.ndarray
    seed: int
    kind: PathKind = PathKind.RADIAL
    theta: np.ndarray = None
    w: np.ndarray = None

    @property
    def h(self):
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    @property
    def min_x(self):
        return float(self.x.min())

    @property
    def t(self):
        return float(self.times[-1])

    def to_csv(self, path, path_id=0):
        write_paths_csv(path, [self], first_id=path_id)


def write_paths_csv(path, samples, first_id=0):
    planar = any(p.theta is not None for p in samples)
    lines = ["path_id,t,x,theta" if planar else "path_id,t,x"]
    for i, p in enumerate(samples, start=first_id):
        for k, (t, x) in enumerate(zip(p.times, p.x)):
            row = f"{i},{t:.17g},{x:.17g}"
            if planar:
                row += f",{p.theta[k]:.17g}"
            lines.append(row)
    Path(path).write_text("\n".join(lines) + "\n")


def write_summary_csv(path, rows):
    """``rows``: iterable of ``(stat, value, stderr)``."""
    lines = ["stat,value,stderr"] + [f"{s},{v:.17g},{e:.17g}" for s, v, e in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def _single_path(kind, x0, t_end, h, seed, noise=Noise.WIENER, theta0=0.0):
    n = n_steps_for(t_end, h)
    h = t_end / n if n else h
    times = h * np.arange(n + 1)
    zero = Noise(noise) is Noise.ZERO
    dw = np.zeros(n) if zero else np.sqrt(h) * block_rng(seed, 0).standard_normal(n)
    w = np.concatenate([[0.0], np.cumsum(dw)])
    if kind is PathKind.WIENER:
        return PathSample(times, x0 + w, seed, kind, w=w)
    x = np.empty(n + 1)
    x[0] = x0
    for k in range(n):
        x[k + 1] = radial_step(x[k], dw[k], h, h)
    _check_state(x)
    theta = None
    if kind is PathKind.PLANAR:
        db = np.zeros(n) if zero else np.sqrt(h) * block_rng(seed, 0, _ANGULAR).standard_normal(n)
        theta = theta0 + np.concatenate([[0.0], np.cumsum(db / np.sinh((x[:-1] + x[1:]) / 2))])
    return PathSample(times, x, seed, kind, theta=theta, w=w)


def simulate_radial(x0, t_end, h, seed, noise=Noise.WIENER):
    """One path of the radial process from ``x0``."""
    if not x0 > 0:
        raise DomainError("x0 must be positive")
    return _single_path(PathKind.RADIAL, x0, t_end, h, seed, noise)


def simulate_planar(x0, theta0, t_end, h, seed, noise=Noise.WIENER):
    """One path in geodesic polar coordinates.

    The radius is driven exactly as in :func:`simulate_radial` with the same
    seed; the angle receives ``dB' / sinh(X)`` with ``X`` taken at the step
    midpoint and ``B'`` an independent stream.
    """
    if not x0 > 0:
        raise DomainError("x0 must be positive")
    return _single_path(PathKind.PLANAR, x0, t_end, h, seed, noise, theta0)


def simulate_wiener(y0, t_end, h, seed):
    """The path ``y0 + W`` on the step grid."""
    return _single_path(PathKind.WIENER, y0, t_end, h, seed)


@dataclass
class Ensemble:
    """Per-path statistics of an ensemble of radial (or Wiener) paths."""

    x0: float
    t: float
    h: float
    seed: int
    x_t: np.ndarray
    min_x: np.ndarray
    w_t: np.ndarray
    int_coth2: np.ndarray = None
    dominated: np.ndarray = None
    theta_t: np.ndarray = None

    @property
    def n_paths(self):
        return len(self.x_t)


def _radial_block(x0, n, h, seed, noise, planar, track_coth, floor=None):
    floor = h if floor is None else floor

    def run(b, start, size):
        rng = block_rng(seed, b, _RADIAL)
        arng = block_rng(seed, b, _ANGULAR) if planar else None
        x = np.full(size, float(x0))
        w = np.zeros(size)
        mn = x.copy()
        dom = np.ones(size, dtype=bool)
        th = np.zeros(size) if planar else None
        ic = np.zeros(size) if track_coth else None
        sq = np.sqrt(h)
        for k in range(n):
            dw = np.zeros(size) if noise is Noise.ZERO else sq * rng.standard_normal(size)
            xo = x
            x = radial_step(x, dw, h, floor)
            w = w + dw
            np.minimum(mn, x, out=mn)
            dom &= (x - x0) > w + (k + 1) * h / 2
            if planar:
                db = np.zeros(size) if noise is Noise.ZERO else sq * arng.standard_normal(size)
                th = th + db / np.sinh((xo + x) / 2)
            if track_coth:
                ic = ic + h * (1 / np.tanh(xo) ** 2 + 1 / np.tanh(x) ** 2) / 2
        _check_state(x)
        return x, mn, w, ic, dom, th

    return run


def radial_ensemble(x0, t_end, h, n_paths, seed, noise=Noise.WIENER, planar=False, threads=None,
                    track_coth=False, floor=None):
    """Terminal statistics of ``n_paths`` radial paths from ``x0``.

    ``dominated[i]`` records whether ``X_t - x0 > W_t + t/2`` held at every
    step of path ``i``.
    """
    if not x0 > 0:
        raise DomainError("x0 must be positive")
    noise = Noise(noise)
    n = n_steps_for(t_end, h)
    h = t_end / n if n else h
    parts = map_blocks(_radial_block(x0, n, h, seed, noise, planar, track_coth, floor), n_paths, threads)
    cat = [np.concatenate([p[i] for p in parts]) if parts and parts[0][i] is not None else None for i in range(6)]
    return Ensemble(x0, t_end, h, seed, cat[0], cat[1], cat[2], cat[3], cat[4], cat[5])


def wiener_ensemble(y0, t_end, h, n_paths, seed, threads=None):
    """``y0 + W`` paths with terminal value, running minimum and ``int coth^2``.

    The integral uses the trapezoidal rule on the step grid and is ``nan`` for
    paths that reach ``(-inf, 0]``.
    """
    n = n_steps_for(t_end, h)
    h = t_end / n if n else h

    def run(b, start, size):
        rng = block_rng(seed, b, _RADIAL)
        x = np.full(size, float(y0))
        mn = x.copy()
        with np.errstate(divide="ignore", invalid="ignore"):
            prev = 1 / np.tanh(x) ** 2
            ic = np.zeros(size)
            sq = np.sqrt(h)
            for _ in range(n):
                x = x + sq * rng.standard_normal(size)
                np.minimum(mn, x, out=mn)
                cur = 1 / np.tanh(x) ** 2
                ic = ic + h * (prev + cur) / 2
                prev = cur
        ic = np.where(mn > 0, ic, np.nan)
        return x, mn, ic

    parts = map_blocks(run, n_paths, threads)
    x, mn, ic = (np.concatenate([p[i] for p in parts]) for i in range(3))
    return Ensemble(y0, t_end, h, seed, x, mn, x - y0, ic)


class GirsanovWeight(NamedTuple):
    logZ: float
    logZstar: float

    @property
    def ratio(self):
        return float(np.exp(self.logZ - self.logZstar))


def _trapezoid_coth2(x, h):
    c = 1 / np.tanh(x) ** 2
    return float(h * (c.sum() - (c[0] + c[-1]) / 2))


def log_girsanov(y0, y_t, t, int_coth2):
    """Vectorized ``(log Z, log Z*)`` of a path from ``y0`` to ``y_t``.

    ``log Z = (1/2) log(sinh y_t / sinh y0) - t/4 + (1/8) int coth^2`` and
    ``log Z* = (y_t - y0)/2 - t/8``.
    """
    y_t = np.asarray(y_t, dtype=float)
    log_ratio = np.log(np.sinh(y_t)) - np.log(np.sinh(y0))
    big = y_t > 20
    if np.any(big):
        log_ratio = np.where(big, y_t - np.log(2) + np.log1p(-np.exp(-2 * np.where(big, y_t, 30))) - np.log(np.sinh(y0)),
                             log_ratio)
    log_z = 0.5 * log_ratio - t / 4 + np.asarray(int_coth2) / 8
    log_zs = (y_t - y0) / 2 - t / 8
    return log_z, log_zs


def girsanov_weights(p):
    """Girsanov weights of a path sample, evaluated on its ``x`` values."""
    if not p.min_x > 0:
        raise DomainError("Girsanov weights need a path that stays in (0, inf)")
    lz, lzs = log_girsanov(p.x[0], p.x[-1], p.t, _trapezoid_coth2(p.x, p.h) if len(p.x) > 1 else 0.0)
    return GirsanovWeight(float(lz), float(lzs))


def girsanov_ratio_product(y0, y_t, t, int_coth2):
    """``Z/Z*`` in product form: ``((1-e^{-2 y_t})/(1-e^{-2 y0}))^{1/2} exp((1/8) int (coth^2 - 1))``."""
    y_t = np.asarray(y_t, dtype=float)
    return np.sqrt(-np.expm1(-2 * y_t) / -np.expm1(-2 * y0)) * np.exp((np.asarray(int_coth2) - t) / 8)


def ratio_bounds(R, t):
    """Pathwise bounds on ``Z/Z*`` for paths from ``y >= R`` staying in ``[R/2, inf)``."""
    from .kernel import bound_C

    return float(np.sqrt(-np.expm1(-R))), bound_C(R, t)


@dataclass
class RatioCheck:
    n_paths: int
    n_qualifying: int
    n_within: int
    lower: float
    upper: float
    ratio_min: float
    ratio_max: float

    @property
    def fraction(self):
        return self.n_within / self.n_qualifying if self.n_qualifying else 1.0


def girsanov_bound_check(y0, floor, t, h, n_paths, seed, threads=None):
    """Fraction of never-crossing Wiener paths whose ratio lies within the pathwise bounds."""
    ens = wiener_ensemble(y0, t, h, n_paths, seed, threads)
    keep = ens.min_x >= floor
    lz, lzs = log_girsanov(y0, ens.x_t[keep], t, ens.int_coth2[keep])
    ratio = np.exp(lz - lzs)
    lo, hi = ratio_bounds(2 * floor, t)
    within = (ratio >= lo) & (ratio <= hi)
    return RatioCheck(ens.n_paths, int(keep.sum()), int(within.sum()), lo, hi,
                      float(ratio.min()) if ratio.size else np.nan, float(ratio.max()) if ratio.size else np.nan)


def weighted_interval_probability(y0, t, h, a, b, n_paths, seed, threads=None):
    """``E[Z_t 1{y0 + W_t in [a, b]}; y0 + W > 0]`` with its standard error."""
    ens = wiener_ensemble(y0, t, h, n_paths, seed, threads)
    ok = ens.min_x > 0
    lz, _ = log_girsanov(y0, np.where(ok, ens.x_t, 1.0), t, np.where(ok, ens.int_coth2, 0.0))
    hit = ok & (ens.x_t >= a) & (ens.x_t <= b)
    vals = np.zeros(len(lz))
    vals[hit] = np.exp(lz[hit])
    return Estimate(float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(len(vals))))


@dataclass
class RestrictedEstimate:
    q: RadialDensity
    escaped_mass: float
    stderr: float
    full: RadialDensity


def restricted_density_estimate(y0, t, floor, n_paths, seed, h=1e-3, bin_width=0.25, threads=None):
    """Split the law of ``X_t`` from ``y0`` by whether the path stayed above ``floor``.

    ``q`` is the histogram of terminal values of paths whose grid minimum
    stayed at or above ``floor``; ``escaped_mass`` is the fraction of the
    remaining paths.
    """
    if not y0 > floor:
        raise DomainError("y0 must exceed the floor")
    ens = radial_ensemble(y0, t, h, n_paths, seed, threads=threads)
    stay = ens.min_x >= floor
    q = RadialDensity.from_samples(t, ens.x_t[stay], n_paths, bin_width, r_max=float(ens.x_t.max()))
    full = RadialDensity.from_samples(t, ens.x_t, n_paths, bin_width, r_max=float(ens.x_t.max()))
    escaped = 1.0 - q.mass
    return RestrictedEstimate(q, escaped, float(np.sqrt(escaped * (1 - escaped) / n_paths)), full)


def drift_domination_check(n_paths, t, seed, h=1e-3, x0=0.01, threads=None):
    """Fraction of paths with ``X_s - x0 > W_s + s/2`` at every step up to ``t``."""
    if t == 0 or n_paths == 0:
        return 1.0
    ens = radial_ensemble(x0, t, h, n_paths, seed, threads=threads)
    return float(ens.dominated.mean())


def crossing_probability_mc(Rs, n_paths=10**6, horizon=200.0, h=1.0, seed=0, threads=None):
    """Monte Carlo estimates of ``P{inf_{r <= horizon} (W_r + r/2) < -R/2}`` for each ``R``.

    The walk is sampled on a grid of step ``h``; between grid points the
    exact Brownian-bridge crossing probability ``exp(-2 (a - L)(b - L) / h)``
    is used, so the only bias is the finite horizon.
    """
    Rs = np.atleast_1d(np.asarray(Rs, dtype=float))
    if np.any(Rs <= 0):
        raise DomainError("R must be positive")
    n = n_steps_for(horizon, h)
    h = horizon / n
    levels = -Rs / 2

    def run(b, start, size):
        rng = block_rng(seed, b, _RADIAL)
        y = np.zeros(size)
        survive = np.ones((len(Rs), size))
        for _ in range(n):
            y_new = y + h / 2 + np.sqrt(h) * rng.standard_normal(size)
            for j, L in enumerate(levels):
                a, c = y - L, y_new - L
                p = np.where((a > 0) & (c > 0), np.exp(-2 * np.maximum(a, 0) * np.maximum(c, 0) / h), 1.0)
                survive[j] *= 1 - p
            y = y_new
        return 1 - survive

    crossed = np.concatenate(map_blocks(run, n_paths, threads), axis=1)
    return [Estimate(float(c.mean()), float(c.std(ddof=1) / np.sqrt(n_paths))) for c in crossed]


def frame_ensemble(x_rep, n_paths, times, h, seed, group=None, x0=0.01, threads=None):
    """Radial unit tangents of planar Brownian paths about ``x_rep . i``.

    Each path starts at distance ``x0`` from the centre in a uniformly random
    direction and carries the frame ``x_rep rot(theta) D(X)``, which is the
    outward radial vector at its position.  The frame is updated by right
    multiplication, so reducing it on the left by ``group`` (done at the
    recording times) does not interfere with the dynamics.

    Returns ``(frames, radii, initial)``: frames and radii at each recording
    time (shape ``(len(times), n_paths, 2, 2)`` and ``(len(times), n_paths)``)
    and the unit tangents at the centre pointing in the initial directions.
    """
    times = np.asarray(times, dtype=float)
    steps = np.rint(times / h).astype(int)
    if np.any(np.abs(steps * h - times) > 1e-9) or np.any(np.diff(steps) <= 0) or steps[0] < 1:
        raise DomainError("recording times must be increasing positive multiples of h")
    x_rep = np.asarray(x_rep, dtype=float)

    def reduce(g):
        return group.reduce_matrices(g)[0] if group is not None else g

    def run(b, start, size):
        rng = block_rng(seed, b, _RADIAL)
        arng = block_rng(seed, b, _ANGULAR)
        phi0 = block_rng(seed, b, _DIRECTION).uniform(0, 2 * np.pi, size)
        c0, s0 = np.cos(phi0 / 2), np.sin(phi0 / 2)
        e0, f0 = np.exp(x0 / 2), np.exp(-x0 / 2)
        # x_rep @ rot(phi0), then @ D(x0)
        ga = x_rep[0, 0] * c0 - x_rep[0, 1] * s0
        gb = x_rep[0, 0] * s0 + x_rep[0, 1] * c0
        gc = x_rep[1, 0] * c0 - x_rep[1, 1] * s0
        gd = x_rep[1, 0] * s0 + x_rep[1, 1] * c0
        initial = reduce(np.stack([np.stack([ga, gb], -1), np.stack([gc, gd], -1)], -2))
        a, bb, c, d = ga * e0, gb * f0, gc * e0, gd * f0
        x = np.full(size, float(x0))
        sq = np.sqrt(h)
        frames = np.empty((len(steps), size, 2, 2))
        radii = np.empty((len(steps), size))
        k = 0
        for j, target in enumerate(steps):
            while k < target:
                xo = x
                x = radial_step(x, sq * rng.standard_normal(size), h, h)
                phi = sq * arng.standard_normal(size) / np.sinh((xo + x) / 2)
                cc, ss = np.cos(phi / 2), np.sin(phi / 2)
                ep, em = np.exp((x - xo) / 2), np.exp(-(x - xo) / 2)
                # right factor D(-xo) rot(phi) D(xo) D(x - xo)
                m00, m01 = cc * ep, np.exp(-xo) * ss * em
                m10, m11 = -np.exp(xo) * ss * ep, cc * em
                a, bb = a * m00 + bb * m10, a * m01 + bb * m11
                c, d = c * m00 + d * m10, c * m01 + d * m11
                k += 1
            _check_state(x)
            g = np.stack([np.stack([a, bb], -1), np.stack([c, d], -1)], -2)
            g = reduce(g / np.sqrt(a * d - bb * c)[:, None, None])
            a, bb, c, d = g[:, 0, 0].copy(), g[:, 0, 1].copy(), g[:, 1, 0].copy(), g[:, 1, 1].copy()
            frames[j] = g
            radii[j] = x
        return frames, radii, initial

    parts = map_blocks(run, n_paths, threads)
    return (np.concatenate([p[0] for p in parts], axis=1),
            np.concatenate([p[1] for p in parts], axis=1),
            np.concatenate([p[2] for p in parts], axis=0))
