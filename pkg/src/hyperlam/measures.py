"""Empirical measures on the unit tangent bundle of a compact quotient.

The Krylov-Bogolyubov mean of order ``n`` started at ``x`` pushes the
diffused point mass at integer times ``t = 0, ..., n-1`` forward by the
outward radial field about ``x`` and averages.  The radial vector is
undefined at ``x`` itself, so the ``t = 0`` term is spread uniformly over the
directions at ``x``.  Atoms are stored after reduction to the Dirichlet
domain of the group, so every diagnostic lives on the compact quotient.
"""

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from . import sl2
from .flows import UnitTangent, geodesic_matrix, horocycle_matrix
from .geom import halfplane_distance
from .sde import frame_ensemble


class Flow(str, Enum):
    GEODESIC = "geodesic"
    STABLE = "stable"
    UNSTABLE = "unstable"


def flow_matrix(flow, s):
    flow = Flow(flow)
    if flow is Flow.GEODESIC:
        return geodesic_matrix(s)
    return horocycle_matrix(s, flow.value)


@dataclass
class EmpiricalTangentMeasure:
    """Weighted atoms ``reps`` (reduced unit tangents) on the quotient."""

    reps: np.ndarray
    weights: np.ndarray
    group: object

    def __post_init__(self):
        self.reps = sl2.as_stack(self.reps).reshape(-1, 2, 2)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (len(self.reps),):
            raise ValueError("one weight per atom is required")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")
        if abs(self.weights.sum() - 1) > 1e-12:
            raise ValueError(f"weights sum to {self.weights.sum()!r}, not 1")
        far = np.arccosh(np.maximum(sl2.cosh_dist_origin(self.reps), 1.0)) > self.group.domain_radius * (1 + 1e-9)
        if far.any():
            raise ValueError(f"{int(far.sum())} atoms lie outside the fundamental domain")

    def __len__(self):
        return len(self.reps)

    def pushforward(self, flow, s):
        moved = sl2.mul(self.reps, flow_matrix(flow, s))
        red, _ = self.group.reduce_matrices(moved)
        return EmpiricalTangentMeasure(red, self.weights, self.group)

    def to_csv(self, path):
        lines = ["a,b,c,d,weight"]
        for g, w in zip(self.reps, self.weights):
            lines.append(",".join(f"{v:.17g}" for v in (*g.ravel(), w)))
        Path(path).write_text("\n".join(lines) + "\n")


class TestKind(str, Enum):
    __test__ = False

    BUMP = "bump"
    ANGULAR_HARMONIC = "harmonic"


_TIP = geodesic_matrix(1.0)


def wendland(q):
    """Compactly supported ``C^2`` profile ``(1-q)^4 (4q+1)`` on ``[0, 1]``, peak 1."""
    q = np.asarray(q, dtype=float)
    return np.where(q < 1, (1 - np.minimum(q, 1)) ** 4 * (4 * q + 1), 0.0)


@dataclass(frozen=True)
class TestFunction:
    """A continuous function on the unit tangent bundle of the quotient, bounded by 1.

    ``Bump`` is a Wendland profile in ``sqrt(d(base)^2 + d(tip)^2) / scale``
    about every lift of ``center``, the tip being the base point moved by the
    geodesic flow for time 1.  ``AngularHarmonic`` is a bump in the base
    distance times ``(1 + cos(k psi + phase)) / 2``, where ``psi`` is the
    angle of the vector, translated back to the centre's lift, measured from
    the centre's own direction.  Points outside the domain are reduced
    first.  With ``scale = inf`` the function is the constant 1.
    """

    __test__ = False  # not a pytest class

    center: UnitTangent
    scale: float
    kind: TestKind = TestKind.BUMP
    harmonic: int = 0
    phase: float = 0.0
    id: str = ""

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        object.__setattr__(self, "kind", TestKind(self.kind))

    def _lifts(self, group):
        if not np.isfinite(self.scale):
            return None
        rho = group.domain_radius
        gam = group.neighbors(2 * rho + self.scale)
        lifts = sl2.mul(gam, self.center.rep)
        near = np.arccosh(np.maximum(sl2.cosh_dist_origin(lifts), 1.0)) <= rho + self.scale
        return lifts[near]

    def __call__(self, reps, group):
        reps = sl2.as_stack(reps).reshape(-1, 2, 2)
        if not np.isfinite(self.scale):
            return np.ones(len(reps))
        outside = sl2.cosh_dist_origin(reps) > np.cosh(group.domain_radius) * (1 + 1e-9)
        if outside.any():
            reps = reps.copy()
            reps[outside] = group.reduce_matrices(reps[outside])[0]
        lifts = self._lifts(group)
        base = sl2.base_point(reps)
        out = np.zeros(len(reps))
        if self.kind is TestKind.BUMP:
            tip = sl2.base_point(sl2.mul(reps, _TIP))
            for L in lifts:
                db = halfplane_distance(base, sl2.base_point(L))
                near = db < self.scale
                if not near.any():
                    continue
                dt = halfplane_distance(tip[near], sl2.base_point(L @ _TIP))
                out[near] += wendland(np.sqrt(db[near] ** 2 + dt**2) / self.scale)
            return out
        for L in lifts:
            db = halfplane_distance(base, sl2.base_point(L))
            near = db < self.scale
            if not near.any():
                continue
            local = sl2.mul(sl2.inverse(L), reps[near])
            # local = rot(psi) D(r) ...: psi is the rotation angle about the centre, 0 along it
            psi = -2 * np.angle(local[:, 1, 1] + 1j * local[:, 1, 0])
            out[near] += wendland(db[near] / self.scale) * (1 + np.cos(self.harmonic * psi + self.phase)) / 2
        return out


def integrate(m, f):
    """``sum_i w_i f(u_i)``."""
    return float(np.sum(m.weights * f(m.reps, m.group)))


def standard_battery(group, x_rep=None, seed=2024, n_bumps=5, harmonics=(1, 2, 3), scale=0.8, spread=0.5):
    """Five bumps and three angular harmonics near the start point ``x_rep . i``.

    Centres sit within ``spread`` of the start point with seeded directions;
    they are reduced to the domain.
    """
    rng = np.random.default_rng(seed)
    x_rep = np.eye(2) if x_rep is None else np.asarray(x_rep, dtype=float)
    k = n_bumps + len(harmonics)
    mats = sl2.mul(x_rep, sl2.mul(sl2.rotation(rng.uniform(0, 2 * np.pi, k)),
                                  sl2.mul(sl2.diagonal(rng.uniform(0, spread, k)),
                                          sl2.rotation(rng.uniform(0, 2 * np.pi, k)))))
    mats, _ = group.reduce_matrices(mats)
    phases = rng.uniform(0, 2 * np.pi, len(harmonics))
    fs = [TestFunction(UnitTangent(mats[i]), scale, TestKind.BUMP, id=f"bump{i}") for i in range(n_bumps)]
    fs += [TestFunction(UnitTangent(mats[n_bumps + j]), scale, TestKind.ANGULAR_HARMONIC, harmonic=kk,
                        phase=float(phases[j]), id=f"harm{kk}")
           for j, kk in enumerate(harmonics)]
    return fs


@dataclass
class KBRun:
    """Recorded radial tangents of one path ensemble, shared by all orders ``n``.

    ``slices[0]`` holds the ``t = 0`` directions at the start point and
    ``slices[t]`` the reduced radial tangents at integer time ``t``.
    """

    slices: list
    radii: np.ndarray
    group: object

    @property
    def n_paths(self):
        return len(self.slices[0])

    @property
    def max_n(self):
        return len(self.slices)

    def measure(self, n):
        if not 1 <= n <= self.max_n:
            raise ValueError(f"order n must lie in [1, {self.max_n}]")
        reps = np.concatenate(self.slices[:n])
        return EmpiricalTangentMeasure(reps, np.full(len(reps), 1.0 / len(reps)), self.group)

    def gap_table(self, flows, s, fs, ns):
        """Rows ``(flow, s, f_id, n, gap)`` from one evaluation per atom."""
        rows = []
        ns = sorted(set(int(n) for n in ns))
        atoms = np.concatenate(self.slices)
        shape = (self.max_n, self.n_paths)
        base = {f.id: f(atoms, self.group).reshape(shape) for f in fs}
        for flow in flows:
            moved = self.group.reduce_matrices(sl2.mul(atoms, flow_matrix(flow, s)))[0]
            for f in fs:
                diff = (f(moved, self.group).reshape(shape) - base[f.id]).sum(axis=1)
                cum = np.cumsum(diff)
                for n in ns:
                    rows.append((Flow(flow).value, float(s), f.id, n, abs(cum[n - 1]) / (n * self.n_paths)))
        return rows


def kb_run(x_rep, max_n, n_paths, seed, group, h=0.01, threads=None):
    """Simulate once and keep the slices needed for every order up to ``max_n``."""
    if max_n < 1:
        raise ValueError("n must be at least 1")
    x_rep = np.asarray(x_rep, dtype=float)
    times = np.arange(1, max_n)
    if len(times):
        frames, radii, initial = frame_ensemble(x_rep, n_paths, times, h, seed, group=group, threads=threads)
        slices = [initial] + list(frames)
    else:
        _, _, initial = frame_ensemble(x_rep, n_paths, [h], h, seed, group=group, threads=threads)
        slices, radii = [initial], np.zeros((0, n_paths))
    return KBRun(slices, radii, group)


def kb_means(x, ns, n_paths, seed, group, h=0.01, threads=None):
    """Krylov-Bogolyubov means for several orders from one simulation."""
    run = kb_run(_rep_of(x), max(ns), n_paths, seed, group, h, threads)
    return {n: run.measure(n) for n in ns}


def kb_mean(x, n, n_paths, seed, group, h=0.01, threads=None):
    return kb_means(x, [n], n_paths, seed, group, h, threads)[n]


def _rep_of(x):
    if isinstance(x, UnitTangent):
        return x.rep
    return sl2.lift(x.w)


def invariance_gap(m, flow, s, fs):
    """``|int f o flow_s dm - int f dm|`` for each test function."""
    pushed = m.pushforward(flow, s)
    return [abs(integrate(pushed, f) - integrate(m, f)) for f in fs]


def write_gap_csv(path, rows):
    lines = ["flow,s,f_id,n,gap"] + [f"{fl},{s:.17g},{fid},{n},{g:.17g}" for fl, s, fid, n, g in rows]
    Path(path).write_text("\n".join(lines) + "\n")
