import numpy as np
import pytest
from scipy.stats import ks_2samp

from hyperlam import kernel, sde
from hyperlam.errors import DomainError, StepError
from hyperlam.kernel import RadialDensity
from hyperlam.sde import Noise, PathKind, PathSample

# Mean of the finite-volume solution at t=20 started from a point mass at 1.
FP_MEAN_T20_FROM_1 = 11.6201
# sqrt(int_0^1 sinh(x(s))^-2 ds) along the noiseless path from x=20.
ANGULAR_SD_X20 = 3.2775e-9
# The same integral averaged over X = 20 + W + s/2: 2 e^{-20} sqrt(e - 1).
ANGULAR_SD_X20_NOISY = 2 * np.exp(-20) * np.sqrt(np.e - 1)


def test_zero_noise_matches_drift_ode():
    for h in (1e-3, 0.1, 0.5):
        p = sde.simulate_radial(1.0, 2.0, h, seed=0, noise=Noise.ZERO)
        assert np.cosh(p.x[-1]) == pytest.approx(np.cosh(1) * np.e, rel=1e-10)
        assert np.allclose(np.cosh(p.x), np.cosh(1) * np.exp(p.times / 2), rtol=1e-10)


def test_drift_flow_is_a_flow():
    x = np.array([1e-6, 0.01, 1.0, 10.0])
    assert np.allclose(sde.drift_flow(sde.drift_flow(x, 0.3), 0.4), sde.drift_flow(x, 0.7), rtol=1e-12)
    assert np.array_equal(sde.drift_flow(x, 0.0), x)


def test_path_grid_and_positivity():
    p = sde.simulate_radial(0.01, 3.0, 1e-3, seed=5)
    assert p.kind is PathKind.RADIAL
    assert p.times[0] == 0 and p.t == pytest.approx(3.0)
    assert np.allclose(np.diff(p.times), p.h)
    assert p.min_x > 0
    assert p.x[0] == 0.01


def test_step_is_adjusted_to_divide_horizon():
    p = sde.simulate_radial(1.0, 1.0, 0.3, seed=0)
    assert len(p.times) == 5 and p.h == pytest.approx(0.25)


def test_same_seed_same_path():
    a = sde.simulate_planar(0.5, 1.0, 1.0, 1e-2, seed=9)
    b = sde.simulate_planar(0.5, 1.0, 1.0, 1e-2, seed=9)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.theta, b.theta)
    c = sde.simulate_radial(0.5, 1.0, 1e-2, seed=9)
    assert np.array_equal(a.x, c.x)


def test_invalid_inputs():
    with pytest.raises(DomainError):
        sde.simulate_radial(0.0, 1.0, 1e-2, seed=0)
    with pytest.raises(DomainError):
        sde.simulate_radial(1.0, 1.0, 0.0, seed=0)


def test_step_error_for_nonpositive_state():
    with pytest.raises(StepError):
        sde._check_state(np.array([1.0, 0.0]))
    with pytest.raises(StepError):
        sde._check_state(np.array([np.nan]))


def test_mean_at_time_twenty():
    ens = sde.radial_ensemble(1.0, 20.0, 1e-2, 10_000, seed=3)
    m = ens.x_t.mean()
    assert 10.2 <= m <= 11.8
    assert abs(m - FP_MEAN_T20_FROM_1) < 4 * ens.x_t.std() / 100 + 0.05
    assert ens.min_x.min() > 0


def test_angular_increments_are_symmetric():
    ens = sde.radial_ensemble(0.5, 1.0, 1e-2, 10_000, seed=4, planar=True)
    th = ens.theta_t
    z = (th - th.mean()) / th.std()
    skew = np.mean(z**3)
    # delta-method standard error; the angle is heavy tailed so sqrt(6/n) is too small
    se = np.std(z**3 - 3 * z) / np.sqrt(len(th))
    assert abs(skew) < 3 * se


def test_angular_spread_far_from_origin():
    ens = sde.radial_ensemble(20.0, 1.0, 1e-2, 10_000, seed=4, planar=True)
    sd = ens.theta_t.std()
    assert sd < 1e-3
    assert ANGULAR_SD_X20 < sd < 2 * ANGULAR_SD_X20
    assert sd == pytest.approx(ANGULAR_SD_X20_NOISY, rel=0.1)


def test_planar_radial_marginal_matches_radial():
    a = sde.radial_ensemble(0.3, 2.0, 1e-2, 10_000, seed=8, planar=True)
    b = sde.radial_ensemble(0.3, 2.0, 1e-2, 10_000, seed=8)
    assert np.array_equal(a.x_t, b.x_t)
    c = sde.radial_ensemble(0.3, 2.0, 1e-2, 10_000, seed=81)
    assert ks_2samp(a.x_t, c.x_t).statistic < 0.02


def test_results_do_not_depend_on_thread_count():
    n = 2 * sde.BLOCK + 17
    one = sde.radial_ensemble(0.01, 0.5, 1e-2, n, seed=1, planar=True, threads=1)
    three = sde.radial_ensemble(0.01, 0.5, 1e-2, n, seed=1, planar=True, threads=3)
    assert np.array_equal(one.x_t, three.x_t) and np.array_equal(one.theta_t, three.theta_t)


def test_monte_carlo_histogram_matches_kernel():
    t = 5.0
    ens = sde.radial_ensemble(0.01, t, 1e-2, 40_000, seed=2)
    mc = RadialDensity.from_samples(t, ens.x_t, ens.n_paths, 0.25, r_max=float(ens.x_t.max()))
    assert kernel.binned_l1(mc, kernel.radial_density_exact(t)) < 0.04


# -- Girsanov ------------------------------------------------------------------

def _frozen_path(y, t, n=1000):
    times = np.linspace(0, t, n + 1)
    return PathSample(times, np.full(n + 1, y), seed=0, kind=PathKind.WIENER)


def test_ratio_of_a_frozen_path():
    y, t = 1.3, 2.0
    w = sde.girsanov_weights(_frozen_path(y, t))
    assert w.ratio == pytest.approx(np.exp(t / (8 * np.sinh(y) ** 2)), rel=1e-10)
    assert w.logZstar == pytest.approx(-t / 8)


def test_ratio_product_form_agrees():
    rng = np.random.default_rng(0)
    for _ in range(20):
        p = sde.simulate_wiener(5.0, 1.0, 1e-3, seed=int(rng.integers(1 << 30)))
        if p.min_x <= 0:
            continue
        w = sde.girsanov_weights(p)
        prod = sde.girsanov_ratio_product(p.x[0], p.x[-1], p.t, sde._trapezoid_coth2(p.x, p.h))
        assert w.ratio == pytest.approx(float(prod), rel=1e-8)


def test_girsanov_needs_positive_path():
    p = PathSample(np.array([0.0, 1.0]), np.array([1.0, -0.5]), seed=0, kind=PathKind.WIENER)
    with pytest.raises(DomainError):
        sde.girsanov_weights(p)


def test_pathwise_ratio_bounds():
    chk = sde.girsanov_bound_check(6.0, 3.0, 4.0, 1e-2, 5000, seed=1)
    assert chk.n_qualifying > 4000
    assert chk.fraction == 1.0
    assert chk.lower <= chk.ratio_min and chk.ratio_max <= chk.upper


def test_weighted_resimulation_identity():
    y0, t, a, b = 1.0, 1.0, 1.5, 2.5
    est = sde.weighted_interval_probability(y0, t, 1e-3, a, b, 20_000, seed=6)
    ens = sde.radial_ensemble(y0, t, 1e-3, 20_000, seed=60)
    hit = (ens.x_t >= a) & (ens.x_t <= b)
    p, se = hit.mean(), hit.std() / np.sqrt(hit.size)
    assert abs(est.value - p) <= 3 * np.hypot(est.stderr, se)


# -- restricted densities and domination ----------------------------------------

def test_restricted_density_without_floor():
    r = sde.restricted_density_estimate(1.0, 1.0, 0.0, 2000, seed=0, h=1e-2)
    assert r.escaped_mass == 0.0
    assert r.q.mass == 1.0


def test_restricted_density_escape_bound():
    r = sde.restricted_density_estimate(6.0, 4.0, 3.0, 10_000, seed=0, h=1e-2)
    assert r.escaped_mass <= kernel.bound_Q(6).value + 3 * r.stderr
    assert r.q.mass + r.escaped_mass == 1.0


def test_restricted_decomposition_reconstructs_full_histogram():
    r = sde.restricted_density_estimate(4.0, 4.0, 3.0, 10_000, seed=3, h=1e-2)
    qm = r.q.bin_masses(r.full.bin_edges)
    fm = r.full.bin_masses(r.full.bin_edges)
    assert np.sum(np.abs(fm - qm)) == pytest.approx(r.escaped_mass, abs=1e-12)
    assert np.all(fm >= qm - 1e-15)


def test_restricted_requires_start_above_floor():
    with pytest.raises(DomainError):
        sde.restricted_density_estimate(1.0, 1.0, 2.0, 10, seed=0)


def test_drift_domination():
    assert sde.drift_domination_check(100, 0.0, seed=0) == 1.0
    assert sde.drift_domination_check(1000, 10.0, seed=0, h=1e-3) == 1.0


def test_crossing_probability_monotone_in_level():
    est = sde.crossing_probability_mc([1, 2, 4], n_paths=20_000, horizon=50, seed=2)
    vals = [e.value for e in est]
    assert vals[0] > vals[1] > vals[2] > 0


# -- CSV ---------------------------------------------------------------------------

def test_path_csv(tmp_path):
    p = sde.simulate_planar(1.0, 0.0, 0.05, 1e-2, seed=0)
    path = tmp_path / "paths.csv"
    sde.write_paths_csv(path, [p, p], first_id=3)
    lines = path.read_text().splitlines()
    assert lines[0] == "path_id,t,x,theta"
    assert len(lines) == 1 + 2 * len(p.times)
    assert lines[1].startswith("3,0,1,")
    sde.write_summary_csv(tmp_path / "s.csv", [("mean", 1.5, 0.1)])
    assert (tmp_path / "s.csv").read_text().splitlines() == ["stat,value,stderr", "mean,1.5,0.10000000000000001"]
