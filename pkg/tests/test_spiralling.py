import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nfapprox.diophantine import analytic_volume_E, count_approximates, mc_volume
from nfapprox.errors import ValidationError
from nfapprox.lattice import LatticeSpec, enumerate_lattice_points, random_theta
from nfapprox.presets import load_preset
from nfapprox.regions import RegionSpec, WeightScheme
from nfapprox.spiralling import (CapSpec, SpherePoint, analytic_volume_AB, cap_contains, cap_volume,
                                 cap_volume_exact, count_directional, directions, project_weighted,
                                 project_weighted_batch, sphere_real)

PRESETS = ("Q", "Qi", "Qsqrt2", "Qsqrt5", "Qcubic")


def test_projection_examples():
    assert np.allclose(project_weighted([-3.0], [1.0]).coords, [[-1.0]])
    assert np.allclose(project_weighted([3.0, 4.0], [0.5, 0.5]).coords.ravel(), [0.6, 0.8])
    p = project_weighted([1.0, 1.0], [0.75, 0.25]).coords.ravel().real
    assert p == pytest.approx([0.5636, 0.8260], abs=5e-5)
    # u = e^{t/2} solves u^3 + u = 1, and the point is (u^{3/2}, u^{1/2})
    u = np.roots([1, 0, 1, -1])
    u = float(u[np.isreal(u)].real[0])
    assert p == pytest.approx([u ** 1.5, u ** 0.5], abs=1e-12)


def test_projection_rejects_zero():
    with pytest.raises(ValidationError):
        project_weighted([0.0, 0.0], [0.5, 0.5])


def test_sphere_point_validation():
    SpherePoint(np.array([[0.6], [0.8j]]))
    with pytest.raises(ValidationError):
        SpherePoint(np.array([[1.0], [1.0]]))


@pytest.mark.parametrize("name", PRESETS)
def test_projection_lands_on_sphere_and_is_flow_invariant(name):
    K = load_preset(name)
    rng = np.random.default_rng(5)
    W = WeightScheme.random(K.d_nu, 2, 1, rng)
    N = 500
    x = rng.normal(size=(N, 2, K.n_places)) * np.exp(rng.uniform(-6, 6, (N, 1, 1)))
    x = x + 1j * rng.normal(size=x.shape) * (K.d_nu == 2) * np.abs(x)
    P = project_weighted_batch(x, W.a)
    assert np.allclose((np.abs(P) ** 2).sum(axis=(1, 2)), 1.0, atol=1e-10)
    t = rng.uniform(-5, 5, N)
    Pt = project_weighted_batch(x * np.exp(t[:, None, None] * W.a), W.a)
    assert np.allclose(Pt, P, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-50, 50).filter(lambda v: abs(v) > 1e-6), min_size=2, max_size=4))
def test_equal_weights_reduce_to_normalization(xs):
    x = np.array(xs)
    w = np.full(len(xs), 1 / len(xs))
    assert np.allclose(project_weighted(x, w).coords.ravel().real, x / np.linalg.norm(x), atol=1e-10)


def test_cap_parse_and_validation():
    assert CapSpec.parse("full", 3).full
    h = CapSpec.parse("hemisphere:-2", 3)
    assert h.center.tolist() == [0.0, -1.0, 0.0] and h.threshold == 0.0
    assert CapSpec.parse({"center": [0, 0, 2], "radius": 1.0}, 3).center.tolist() == [0, 0, 1]
    for bad in ("ball", {"center": [1, 0], "radius": 1.0}, {"center": [0, 0, 0], "radius": 1.0},
                {"center": [1, 0, 0], "radius": 4.0}, "hemisphere:+4"):
        with pytest.raises(ValidationError):
            CapSpec.parse(bad, 3)
    with pytest.raises(ValidationError):
        CapSpec.whole().complemented()


def test_cap_volume_examples():
    assert cap_volume(CapSpec.whole(), 3, 1000, 0) == (1.0, 0.0)
    est, se = cap_volume(CapSpec.hemisphere(2), 2, 10 ** 5, seed=1)
    assert abs(est - 0.5) < 3 * se
    cap = CapSpec(np.array([0, 0, 1.0]), math.pi / 3)
    est, se = cap_volume(cap, 3, 10 ** 5, seed=2)
    assert cap_volume_exact(cap, 3) == pytest.approx(0.25)
    assert abs(est - 0.25) < 3 * se
    with pytest.raises(ValidationError):
        cap_volume(cap, 3, 10, 0)


@pytest.mark.parametrize("dim,radius", [(2, 0.7), (4, 1.1), (5, 2.0), (6, 0.4), (8, math.pi / 2)])
def test_cap_volume_exact_vs_mc(dim, radius):
    cap = CapSpec(np.ones(dim), radius)
    est, se = cap_volume(cap, dim, 2 * 10 ** 5, seed=dim)
    assert abs(est - cap_volume_exact(cap, dim)) < 4 * se
    comp = cap.complemented()
    assert cap_volume_exact(comp, dim) == pytest.approx(1 - cap_volume_exact(cap, dim))


def test_sphere_real_ordering():
    pts = np.array([[[1.0 + 2j, 3.0], [4.0 + 5j, 6.0]]])
    assert sphere_real(pts, [2, 1]).tolist() == [[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]]


def test_directional_examples(fields):
    K = fields["Q"]
    W = WeightScheme.equal([1], 1, 1)
    spec = LatticeSpec(K, 1, 1, 1.61803)
    plus = CapSpec.hemisphere(1, 0, +1)
    assert count_directional(spec, W, 1.0, math.log(2), plus, plus) == 1
    assert count_directional(spec, W, 1.0, math.log(2), CapSpec.whole(), CapSpec.whole()) == 4
    # the four solutions occupy the four sign quadrants once each
    minus = CapSpec.hemisphere(1, 0, -1)
    for A in (plus, minus):
        for B in (plus, minus):
            assert count_directional(spec, W, 1.0, math.log(2), A, B) == 1
    # a pinhole cap on S^1 catches nothing
    Kq = fields["Qi"]
    tiny = CapSpec(np.array([1.0, 0.3]), 1e-9)
    spec_i = LatticeSpec(Kq, 1, 1, 0.3 + 0.7j)
    Wi = WeightScheme.equal(Kq.d_nu, 1, 1)
    assert count_approximates(spec_i, Wi, 1.0, 2.0) > 0
    assert count_directional(spec_i, Wi, 1.0, 2.0, tiny, CapSpec.whole()) == 0


def test_analytic_volume_AB_examples(fields):
    K = fields["Q"]
    W = WeightScheme.equal([1], 1, 1)
    full, plus = CapSpec.whole(), CapSpec.hemisphere(1)
    assert analytic_volume_AB(K, W, 1.0, 1.0, full, full) == pytest.approx(4.0)
    assert analytic_volume_AB(K, W, 1.0, 1.0, plus, full) == pytest.approx(2.0)
    Kc = fields["Qcubic"]
    Wc = WeightScheme.equal(Kc.d_nu, 1, 1)
    h = CapSpec.hemisphere(3)
    assert analytic_volume_AB(Kc, Wc, 1.0, 2.0, h, h) == pytest.approx(analytic_volume_E(Kc, Wc, 1.0, 2.0) / 4)


@pytest.mark.parametrize("name", PRESETS)
def test_cap_and_complement_add_up(name):
    K = load_preset(name)
    rng = np.random.default_rng(8)
    W = WeightScheme.random(K.d_nu, 1, 1, rng)
    spec = LatticeSpec(K, 1, 1, random_theta(K, 1, 1, rng))
    deg = K.degree
    A = CapSpec(rng.normal(size=deg), float(rng.uniform(0.5, 2.5)))
    B = CapSpec(rng.normal(size=deg), float(rng.uniform(0.5, 2.5)))
    total = count_approximates(spec, W, 1.0, 3.0)
    parts = [count_directional(spec, W, 1.0, 3.0, a, b)
             for a in (A, A.complemented()) for b in (B, B.complemented())]
    assert sum(parts) == total
    assert count_directional(spec, W, 1.0, 3.0, CapSpec.whole(), CapSpec.whole()) == total


def test_directional_count_agrees_with_record_directions(fields):
    K = fields["Qi"]
    rng = np.random.default_rng(3)
    W = WeightScheme.random(K.d_nu, 1, 1, rng)
    spec = LatticeSpec(K, 1, 1, random_theta(K, 1, 1, rng))
    recs = enumerate_lattice_points(spec, RegionSpec("E", 1.0, 3.0), W)
    da, db = directions(recs, W)
    assert np.allclose((da ** 2).sum(axis=1), 1) and np.allclose((db ** 2).sum(axis=1), 1)
    A = CapSpec(np.array([1.0, 1.0]), 1.0)
    B = CapSpec.hemisphere(2, 1, -1)
    expect = int((cap_contains(A, da) & cap_contains(B, db)).sum())
    assert count_directional(spec, W, 1.0, 3.0, A, B) == expect


@pytest.mark.parametrize("name", ["Q", "Qi"])
def test_product_law_for_round_balls(name):
    # one place and m = n = 1: the quasi-norm ball is an interval or a disc
    K = load_preset(name)
    W = WeightScheme.equal(K.d_nu, 1, 1)
    d = K.degree
    A = CapSpec(np.eye(d)[0], 0.3) if d > 1 else CapSpec.hemisphere(1)
    B = CapSpec.hemisphere(d, 0, -1)
    est, se = mc_volume(K, W, RegionSpec("E_AB", 1.0, 1.0, (A, B)), 10 ** 6, seed=1)
    assert abs(est - analytic_volume_AB(K, W, 1.0, 1.0, A, B)) < 3 * se


def test_product_law_fails_for_square_balls():
    # Q(sqrt2), equal weights: {||x||_a < r} is a square, whose angular density
    # is sec^2 near an axis, so the cap share is tan(0.3)/4 rather than 0.6/(2 pi)
    K = load_preset("Qsqrt2")
    W = WeightScheme.equal(K.d_nu, 1, 1)
    A, B = CapSpec(np.array([1.0, 0.0]), 0.3), CapSpec.whole()
    est, se = mc_volume(K, W, RegionSpec("E_AB", 1.0, 1.0, (A, B)), 10 ** 6, seed=1)
    square = analytic_volume_E(K, W, 1.0, 1.0) * math.tan(0.3) / 4
    assert abs(est - square) < 3 * se
    assert analytic_volume_AB(K, W, 1.0, 1.0, A, B) - est > 20 * se
