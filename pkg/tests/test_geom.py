import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from hyperlam import geom, sl2
from hyperlam.errors import DomainError, IterationCapExceeded


def random_disk_points(rng, n, rmax=0.99):
    return np.sqrt(rng.uniform(0, rmax**2, n)) * np.exp(2j * np.pi * rng.uniform(size=n))


# -- charts ---------------------------------------------------------------

def test_chart_round_trips_vectorized(rng):
    z = random_disk_points(rng, 10_000, 0.95)
    w = geom.disk_to_halfplane(z)
    assert np.max(np.abs(geom.halfplane_to_disk(w) - z)) < 1e-12
    r, th = geom.halfplane_to_polar(w)
    back = geom.polar_to_halfplane(r, th)
    assert np.max(np.abs(geom.halfplane_to_disk(back) - z)) < 1e-12
    assert np.max(np.abs(np.tanh(r / 2) * np.exp(1j * th) - z)) < 1e-12


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 6), st.floats(0, 2 * np.pi, exclude_max=True))
def test_point_round_trip_through_all_charts(r, theta):
    p = geom.polar(r, theta)
    for path in itertools.permutations(["disk", "halfplane", "polar"]):
        q = p
        for chart in path:
            q = q.convert(chart)
        q = q.to_polar()
        assert abs(q.coords[0] - r) < 1e-12 * max(1, np.exp(r))
        if r > 1e-6:
            diff = np.angle(np.exp(1j * (q.coords[1] - theta)))
            assert abs(diff) < 1e-12 / np.tanh(r / 2) * 10


def test_chart_domain_constraints():
    with pytest.raises(DomainError):
        geom.disk(1.0)
    with pytest.raises(DomainError):
        geom.halfplane(1 - 0.5j)
    with pytest.raises(DomainError):
        geom.polar(-1, 0.0)
    assert geom.polar(1.0, 7.0).coords[1] == pytest.approx(7.0 - 2 * np.pi)


def test_polar_angle_zero_is_positive_real_axis_of_the_disk():
    assert geom.polar(1.0, 0.0).to_disk().coords == pytest.approx(np.tanh(0.5))
    assert geom.polar(1.0, np.pi / 2).to_disk().coords == pytest.approx(1j * np.tanh(0.5))


# -- distance ---------------------------------------------------------------

@pytest.mark.parametrize("theta", [0.0, 1.0, 4.0])
def test_distance_along_polar_ray(theta):
    assert geom.distance(geom.origin(), geom.polar(1.5, theta)) == pytest.approx(1.5, abs=1e-12)


def test_distance_to_itself():
    a = geom.disk(0.3 - 0.4j)
    assert geom.distance(a, a) == 0.0


def test_distance_on_imaginary_axis_matches_metric_integral():
    # length of [i, i e] in |dz| / Im z
    oracle = quad(lambda y: 1 / y, 1, np.e, epsabs=1e-14)[0]
    assert geom.distance(geom.halfplane(1j), geom.halfplane(1j * np.e)) == pytest.approx(oracle, abs=1e-14)
    assert oracle == pytest.approx(1.0, abs=1e-14)


points = st.builds(lambda r, t: geom.polar(r, t), st.floats(0, 5), st.floats(0, 2 * np.pi, exclude_max=True))


@settings(max_examples=200, deadline=None)
@given(points, points, points)
def test_distance_is_a_metric(a, b, c):
    dab, dba = geom.distance(a, b), geom.distance(b, a)
    assert dab >= 0
    assert abs(dab - dba) < 1e-10
    assert geom.distance(a, c) <= dab + geom.distance(b, c) + 1e-9


def test_distance_is_invariant_under_generators(octagon, rng):
    a = geom.disk_to_halfplane(random_disk_points(rng, 200, 0.9))
    b = geom.disk_to_halfplane(random_disk_points(rng, 200, 0.9))
    d = geom.halfplane_distance(a, b)
    for g in octagon.generators:
        dg = geom.halfplane_distance(sl2.mobius(g, a), sl2.mobius(g, b))
        assert np.max(np.abs(dg - d)) < 1e-10


def test_circle_length():
    assert geom.circle_length(0) == 0
    assert geom.circle_length(1) == pytest.approx(2 * np.pi * np.sinh(1))
    assert geom.circle_length(10) == pytest.approx(2 * np.pi * np.sinh(10))
    with pytest.raises(DomainError):
        geom.circle_length(-1)


# -- octagon group and reduction -------------------------------------------

def test_octagon_group_structure(octagon):
    g = octagon.generators
    assert g.shape == (8, 2, 2)
    assert np.max(np.abs(sl2.det(g) - 1)) < 1e-12
    for k in range(4):
        assert sl2.same_element(g[k] @ g[k + 4], np.eye(2), atol=1e-12)
    # each generator moves the origin by twice the inradius
    assert np.allclose(np.arccosh(sl2.cosh_dist_origin(g)), 2 * octagon.inradius)
    # vertex-cycle relation of the genus-two surface
    word = np.eye(2)
    for k in (0, 5, 2, 7, 4, 1, 6, 3):
        word = word @ g[k]
    assert sl2.same_element(word, np.eye(2), atol=1e-9)


def test_reduce_point_inside_is_unchanged(octagon):
    p = geom.polar(0.7, 2.0)
    q, gamma = octagon.reduce_to_domain(p)
    assert q.chart is geom.Chart.POLAR
    assert geom.distance(p, q) < 1e-12
    assert sl2.same_element(gamma, np.eye(2))


@pytest.mark.parametrize("k", range(8))
def test_reduce_single_generator_image(octagon, k):
    q0 = geom.polar(0.4, 0.3 + k)
    g = octagon.generators[k]
    p = geom.halfplane(complex(sl2.mobius(g, q0.w)))
    q, gamma = octagon.reduce_to_domain(p)
    assert geom.distance(q, q0) < 1e-10
    assert sl2.same_element(gamma, sl2.inverse(g), atol=1e-10)
    assert abs(complex(sl2.mobius(gamma, p.w)) - q.w) < 1e-10


def _words(gens, max_len):
    out = [np.eye(2)]
    frontier = [np.eye(2)]
    for _ in range(max_len):
        frontier = [g @ w for w in frontier for g in gens]
        out += frontier
    return np.array(out)


def test_reduction_beats_all_short_words(octagon, rng):
    words = _words(octagon.generators, 4)
    z = random_disk_points(rng, 60, 0.995)
    for zi in z:
        q, gamma = octagon.reduce_to_domain(geom.disk(zi))
        dq = geom.distance(geom.origin(), q)
        assert dq <= octagon.domain_radius * (1 + 1e-9)
        lifts = sl2.mobius(words, q.w)
        # no word of length <= 4 gives a representative closer to the origin
        assert np.min(geom.halfplane_distance(1j, lifts)) >= dq - 1e-9
        assert abs(complex(sl2.mobius(gamma, geom.disk(zi).w)) - q.w) < 1e-8 * max(1, abs(q.w))


def test_reduction_is_idempotent_and_local_dirichlet(octagon, rng):
    pts = sl2.lift(geom.disk_to_halfplane(random_disk_points(rng, 2000, 0.999)))
    red, _ = octagon.reduce_matrices(pts)
    again, acc = octagon.reduce_matrices(red, track=True)
    assert np.array_equal(again, red)
    assert np.all(sl2.same_element(acc, np.eye(2)))
    cur = sl2.cosh_dist_origin(red)
    for g in octagon.generators:
        assert np.all(sl2.cosh_dist_origin(g @ red) >= cur * (1 - 1e-12))


def test_reduced_distance_is_generator_invariant(octagon, rng):
    z = random_disk_points(rng, 200, 0.99)
    for g in octagon.generators:
        p = geom.disk_to_halfplane(z)
        d1 = np.arccosh(sl2.cosh_dist_origin(octagon.reduce_matrices(sl2.lift(p))[0]))
        d2 = np.arccosh(sl2.cosh_dist_origin(octagon.reduce_matrices(sl2.lift(sl2.mobius(g, p)))[0]))
        assert np.max(np.abs(d1 - d2)) < 1e-10


def test_iteration_cap(octagon):
    capped = geom.FuchsianGroup(octagon.generators, octagon.domain_radius, max_iter=1)
    far = sl2.lift(geom.polar(12.0, 0.3).w)
    with pytest.raises(IterationCapExceeded):
        capped.reduce_matrices(far)


def test_generator_determinant_is_validated():
    with pytest.raises(DomainError):
        geom.FuchsianGroup(np.array([[[2.0, 0], [0, 1.0]]]), 1.0)


def test_group_file_round_trip(tmp_path, octagon):
    path = tmp_path / "octagon.txt"
    octagon.to_file(path)
    loaded = geom.FuchsianGroup.from_file(path, domain_radius=octagon.domain_radius)
    assert np.allclose(loaded.generators, octagon.generators, atol=1e-15)


def test_group_file_appends_inverses_and_estimates_radius(tmp_path, octagon):
    path = tmp_path / "half.txt"
    lines = ["# four translations"] + [" ".join(f"{v:.17g}" for v in g.ravel()) for g in octagon.generators[:4]]
    path.write_text("\n".join(lines) + "\n")
    loaded = geom.FuchsianGroup.from_file(path)
    assert len(loaded.generators) == 8
    assert loaded.domain_radius <= octagon.domain_radius * (1 + 1e-5)
    assert loaded.domain_radius > octagon.domain_radius * 0.95


def test_group_file_rejects_malformed_lines(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("1 0 0\n")
    with pytest.raises(ValueError):
        geom.FuchsianGroup.from_file(path, domain_radius=1.0)


def test_neighbors_are_distinct_and_sorted(octagon):
    nb = octagon.neighbors(2 * octagon.domain_radius)
    d = np.arccosh(np.maximum(sl2.cosh_dist_origin(nb), 1))
    assert np.all(np.diff(d) >= -1e-12)
    assert d[0] == 0 and np.all(d <= 2 * octagon.domain_radius + 1e-12)
    assert np.sum(np.abs(d - 2 * octagon.inradius) < 1e-9) == 8
    for i in range(len(nb)):
        assert np.sum(sl2.same_element(nb, nb[i], atol=1e-8)) == 1
