"""Experiment recipes behind the command line runner.

Each recipe writes its CSV artifacts into ``out`` and returns summary rows
``(criterion, value, threshold, passed)``.  Sizes can be capped through
:class:`Caps`; all randomness derives from the configured seed, and no
timing or host information is written, so artifacts are reproducible byte
for byte.
"""

from dataclasses import dataclass, field
from pathlib import Path
from statistics import median

import numpy as np

from . import fpe, herglotz, kernel, measures, sde
from .geom import octagon_group

DEFAULT_TOLERANCES = {
    "decay_ratio": 0.5,
    "oracle_l1": 0.02,
    "ode_relerr": 1e-10,
    "ratio_fraction": 1.0,
    "domination_fraction": 1.0,
    "q_sigma": 3.0,
    "shift_bound": 1.0,
    "kb_ratio": 0.5,
    "kb_decreasing": 4,
    "w1_two": 0.05,
    "w1_uniform": 0.02,
    "affine_gap": 1e-3,
    "affine_refine": 0.5,
    "negative_factor": 10.0,
}


@dataclass
class Caps:
    max_paths: int = None
    max_grid: int = None

    def paths(self, n):
        return n if self.max_paths is None else min(n, self.max_paths)

    def grid(self, n):
        return n if self.max_grid is None else min(n, self.max_grid)


@dataclass
class Context:
    out: Path
    seed: int = 2024
    threads: int = None
    caps: Caps = field(default_factory=Caps)
    tol: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    kb_ns: tuple = (8, 16, 32, 64)

    def path(self, name):
        self.out.mkdir(parents=True, exist_ok=True)
        return self.out / name


def _write(path, header, rows):
    lines = [header]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def shift_decay(ctx):
    times, shifts = (5, 10, 20, 40), (0.25, 0.5, 1.0)
    rows, table = [], {}
    for t in times:
        d = kernel.radial_density_exact(t)
        for s in shifts:
            v = kernel.tv_shift(d, s)
            table[t, s] = v.value
            rows.append((t, s, v.value, v.uncertainty))
    _write(ctx.path("tv_shift.csv"), "t,s,value,uncertainty", rows)
    decreasing = all(table[a, s] > table[b, s] for s in shifts for a, b in zip(times, times[1:]))
    ratio = max(table[40, s] / table[5, s] for s in shifts)
    thr = ctx.tol["decay_ratio"]
    return [("I_40<I_5/2", ratio, thr, decreasing and ratio < thr)]


def oracle_agreement(ctx):
    t = 5.0
    exact = kernel.radial_density_exact(t)
    fp = fpe.fp_density_from_origin(t, n_cells=ctx.caps.grid(8000))
    n_mc = ctx.caps.paths(100_000)
    ens = sde.radial_ensemble(0.01, t, 1e-3, n_mc, ctx.seed, threads=ctx.threads)
    mc = kernel.RadialDensity.from_samples(t, ens.x_t, n_mc, 0.25)
    exact.to_csv(ctx.path("density_exact.csv"))
    fp.to_csv(ctx.path("density_fp.csv"))
    mc.to_csv(ctx.path("density_mc.csv"))
    pairs = {"exact-fp": (exact, fp), "exact-mc": (exact, mc), "fp-mc": (fp, mc)}
    l1 = {k: kernel.binned_l1(a, b, 0.25) for k, (a, b) in pairs.items()}
    _write(ctx.path("oracle_l1.csv"), "pair,l1", sorted(l1.items()))

    ode = []
    for x0 in (0.1, 1.0, 5.0):
        for h in (0.1, 0.01, 1e-3):
            p = sde.simulate_radial(x0, 10.0, h, ctx.seed, noise=sde.Noise.ZERO)
            target = np.cosh(x0) * np.exp(5.0)
            ode.append((x0, h, abs(np.cosh(p.x[-1]) / target - 1)))
    _write(ctx.path("drift_ode.csv"), "x0,h,relerr", ode)
    worst_l1 = max(l1.values())
    worst_ode = max(r[2] for r in ode)
    return [
        ("oracle_l1_max", worst_l1, ctx.tol["oracle_l1"], worst_l1 <= ctx.tol["oracle_l1"]),
        ("drift_ode_relerr", worst_ode, ctx.tol["ode_relerr"], worst_ode <= ctx.tol["ode_relerr"]),
    ]


def girsanov_bounds(ctx):
    chk = sde.girsanov_bound_check(6.0, 3.0, 4.0, 1e-3, ctx.caps.paths(10_000), ctx.seed, threads=ctx.threads)
    dom = sde.drift_domination_check(ctx.caps.paths(1000), 10.0, ctx.seed, threads=ctx.threads)
    sde.write_summary_csv(ctx.path("girsanov_summary.csv"), [
        ("n_paths", chk.n_paths, 0.0),
        ("n_never_crossing", chk.n_qualifying, 0.0),
        ("n_within_bounds", chk.n_within, 0.0),
        ("lower_bound", chk.lower, 0.0),
        ("upper_bound", chk.upper, 0.0),
        ("ratio_min", chk.ratio_min, 0.0),
        ("ratio_max", chk.ratio_max, 0.0),
        ("domination_fraction", dom, 0.0),
    ])
    return [
        ("girsanov_ratio_within_bounds", chk.fraction, ctx.tol["ratio_fraction"],
         chk.fraction >= ctx.tol["ratio_fraction"]),
        ("drift_domination_fraction", dom, ctx.tol["domination_fraction"], dom >= ctx.tol["domination_fraction"]),
    ]


def bound_terms(ctx):
    Rs = (2.0, 4.0, 6.0)
    est = sde.crossing_probability_mc(Rs, n_paths=ctx.caps.paths(1_000_000), horizon=200.0, seed=ctx.seed,
                                      threads=ctx.threads)
    q_rows, zs = [], []
    for R, e in zip(Rs, est):
        closed = kernel.bound_Q(R).value
        z = abs(e.value - closed) / e.stderr
        zs.append(z)
        q_rows.append((R, closed, e.value, e.stderr, z))
    _write(ctx.path("q_estimates.csv"), "R,closed_form,monte_carlo,stderr,z", q_rows)

    rng = np.random.default_rng(ctx.seed)
    ts, ss = rng.uniform(0.1, 100, 100), rng.uniform(0, 1, 100)
    g_rows, ratios = [], []
    for t, s in zip(ts, ss):
        tv = kernel.gaussian_shift_tv(t, s)
        bound = s * np.sqrt(2 / (np.pi * t))
        ratios.append(tv / bound if bound > 0 else 0.0)
        g_rows.append((t, s, tv, bound))
    _write(ctx.path("gaussian_shift.csv"), "t,s,tv,bound", g_rows)
    _write(ctx.path("bound_c.csv"), "R,t,C", [(R, t, kernel.bound_C(R, t)) for R in Rs for t in (0.0, 1.0, 2.0, 4.0)])
    worst_z, worst_ratio = max(zs), max(ratios)
    return [
        ("Q_mc_max_z", worst_z, ctx.tol["q_sigma"], worst_z <= ctx.tol["q_sigma"]),
        ("gaussian_shift_tv/bound_max", worst_ratio, ctx.tol["shift_bound"], worst_ratio <= ctx.tol["shift_bound"]),
    ]


def kb_invariance(ctx):
    group = octagon_group()
    ns = sorted(set(int(n) for n in ctx.kb_ns))
    run = measures.kb_run(np.eye(2), max(ns), ctx.caps.paths(2000), ctx.seed, group, threads=ctx.threads)
    fs = measures.standard_battery(group)
    flows = (measures.Flow.GEODESIC, measures.Flow.UNSTABLE, measures.Flow.STABLE)
    rows = run.gap_table(flows, 1.0, fs, ns)
    measures.write_gap_csv(ctx.path("kb_gaps.csv"), rows)
    run.measure(ns[0]).to_csv(ctx.path(f"kb_measure_n{ns[0]}.csv"))
    if len(ns) < 2:
        return []
    lo, hi = ns[0], ns[-1]
    gap = {(fl, fid, n): g for fl, _, fid, n, g in rows}
    bumps = [f.id for f in fs if f.kind is measures.TestKind.BUMP]
    worst_ratio, ok = 0.0, True
    for fl in (measures.Flow.GEODESIC.value, measures.Flow.UNSTABLE.value):
        dec = sum(gap[fl, b, hi] < gap[fl, b, lo] for b in bumps)
        ratio = median(gap[fl, f.id, hi] / gap[fl, f.id, lo] for f in fs)
        worst_ratio = max(worst_ratio, ratio)
        ok &= dec >= ctx.tol["kb_decreasing"] and ratio < ctx.tol["kb_ratio"]
    return [(f"kb_median_gap{hi}/gap{lo}", worst_ratio, ctx.tol["kb_ratio"], bool(ok))]


def herglotz_recover(ctx):
    grid = ctx.caps.grid(256)
    z = herglotz.sample_circles((0.5, 0.8), 64)
    truths = {
        "two_atoms": herglotz.BoundaryMeasure.atoms([1.0, 4.0], [0.3, 0.7]),
        "uniform": herglotz.BoundaryMeasure.uniform(grid, mass=1.0),
    }
    w1 = {}
    for name, phi in truths.items():
        rec = herglotz.recover_boundary_measure(z, herglotz.harmonic_extension(phi, z), grid)
        phi.to_csv(ctx.path(f"boundary_true_{name}.csv"))
        rec.measure.to_csv(ctx.path(f"boundary_recovered_{name}.csv"))
        rec.to_csv(ctx.path(f"recovery_report_{name}.csv"))
        w1[name] = herglotz.circle_w1(rec.measure, phi)
    _write(ctx.path("recovery_w1.csv"), "measure,w1", sorted(w1.items()))

    n = ctx.caps.grid(256)
    fs = herglotz.flow_box_battery()
    exact = herglotz.FlowBoxMeasure(0j, 0.5, herglotz.BoundaryMeasure.uniform(256))
    control = herglotz.FlowBoxMeasure(0j, 0.5, herglotz.BoundaryMeasure.uniform(256), perturbation=0.2)
    a, b = 1.05, 0.02
    g1 = herglotz.affine_conditional_check(exact, a, b, fs, n=n)
    g2 = herglotz.affine_conditional_check(exact, a, b, fs, n=2 * n)
    gc = herglotz.affine_conditional_check(control, a, b, fs, n=n)
    _write(ctx.path("affine_gaps.csv"), "f_id,n,gap_invariant,gap_refined,gap_control",
           [(f.id, n, x, y, c) for f, x, y, c in zip(fs, g1, g2, gc)])
    value = max(w1["two_atoms"] / ctx.tol["w1_two"], w1["uniform"] / ctx.tol["w1_uniform"])
    top, top2, topc = max(g1), max(g2), max(gc)
    ok10 = top < ctx.tol["affine_gap"] and top2 <= ctx.tol["affine_refine"] * top and topc >= ctx.tol["negative_factor"] * top
    return [
        ("herglotz_w1/threshold_max", value, 1.0, value <= 1.0),
        ("affine_gap_max", top, ctx.tol["affine_gap"], bool(ok10)),
    ]


RECIPES = {
    "theorem2-decay": shift_decay,
    "oracle-agreement": oracle_agreement,
    "girsanov-bounds": girsanov_bounds,
    "bound-terms": bound_terms,
    "kb-invariance": kb_invariance,
    "herglotz-recover": herglotz_recover,
}


def reproducibility(ctx, names=None, max_paths=20_000, max_grid=128, kb_ns=(8, 16)):
    """Run each recipe twice at capped size with one and two threads; compare bytes."""
    import filecmp
    import tempfile

    names = names or list(RECIPES)
    same = True
    rows = []
    with tempfile.TemporaryDirectory() as tmp:
        for name in names:
            dirs = []
            for threads in (1, 2):
                d = Path(tmp) / f"{name}-{threads}"
                sub = Context(d, ctx.seed, threads, Caps(max_paths, max_grid), dict(ctx.tol), kb_ns)
                RECIPES[name](sub)
                dirs.append(d)
            files = sorted(p.name for p in dirs[0].iterdir())
            match = files == sorted(p.name for p in dirs[1].iterdir()) and all(
                filecmp.cmp(dirs[0] / f, dirs[1] / f, shallow=False) for f in files)
            rows.append((name, match))
            same &= match
    _write(ctx.path("reproducibility.csv"), "subcommand,identical", rows)
    return [("bit_identical_outputs", 1.0 if same else 0.0, 1.0, same)]
