import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from secisac.crb import angle_scale_exact
from secisac.errors import InfiniteErgodicCrb
from secisac.stochastic import (
    EXACT_TRUNCATION,
    UNTRUNCATED_DENSITY,
    angle_ccdf,
    ccdf_crb_approx,
    ccdf_crb_exact,
    ccdf_crb_lower,
    ccdf_crb_phi,
    ccdf_crb_upper,
    clt_moments_3d,
    clt_moments_4d,
    ergodic_crb_approx,
    ergodic_crb_exact,
    ergodic_crb_lower,
    ergodic_crb_phi,
    ergodic_from_ccdf,
    gaussian_domain_probability,
    mean_sec2,
    truncated_angle_ccdf,
)
from secisac.system_model import SystemParams, channel_aggregates, make_rng, sample_angles, sample_channels

positive = st.floats(1e-3, 1e3)


def _physical_aggregates(n, count, shift=None, seed=0):
    rng = make_rng(seed)
    h = sample_channels(rng, count, n)
    theta = sample_angles(rng, count)
    return np.column_stack(channel_aggregates(h, theta, shift))


def test_moments_3d_match_physical_channels():
    z = _physical_aggregates(15, 200_000)
    m = clt_moments_3d(15)
    np.testing.assert_allclose(z.mean(axis=0), m.mean, atol=0.05)
    np.testing.assert_allclose(np.cov(z.T), m.covariance, atol=0.25)


@pytest.mark.parametrize("phases", [(0.0, 0.0), (0.3, 1.9), (2.0, 0.5)])
def test_moments_4d_match_physical_channels(phases):
    pa, pb = phases
    z = _physical_aggregates(15, 200_000, shift=pb - pa, seed=3)
    m = clt_moments_4d(15, pa, pb)
    np.testing.assert_allclose(z.mean(axis=0), m.mean, atol=0.05)
    np.testing.assert_allclose(np.cov(z.T), m.covariance, atol=0.25)


@given(st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
def test_moments_4d_rank_deficient_psd(pa, pb):
    eig = np.linalg.eigvalsh(clt_moments_4d(15, pa, pb).covariance)
    assert eig.min() > -1e-9
    assert np.sum(eig > 1e-9) == 3


def test_moments_4d_sampling():
    z = clt_moments_4d(15, 0.4, 1.1).sample(make_rng(1), 50_000)
    assert z.shape == (50_000, 4)
    d = 0.4 - 1.1
    w = math.cos(d) * z[:, 0] + math.sin(d) * z[:, 1]
    np.testing.assert_allclose(z[:, 3], w, atol=1e-6)


def test_domain_probability_half_space():
    p, se = gaussian_domain_probability(clt_moments_3d(15), lambda z: z[:, 0] > 0, 40_000, make_rng(2))
    assert abs(p - 0.5) < 4 * se
    assert se == pytest.approx(math.sqrt(0.25 / 40_000), rel=1e-3)


def test_domain_probability_needs_samples():
    with pytest.raises(ValueError):
        gaussian_domain_probability(clt_moments_3d(15), lambda z: z[:, 0] > 0, 999, make_rng(2))


@given(positive, positive)
def test_angle_ccdf_range_and_saturation(scale, eps):
    p = angle_ccdf(scale, eps)
    assert 0.0 <= p <= 1.0
    if eps <= scale:
        assert p == 1.0


@given(positive, positive, positive)
def test_angle_ccdf_non_increasing(scale, e1, e2):
    lo, hi = sorted((e1, e2))
    assert angle_ccdf(scale, hi) <= angle_ccdf(scale, lo)


def test_angle_ccdf_infinite_scale():
    assert angle_ccdf(math.inf, 1.0) == 1.0


def test_angle_ccdf_matches_sampling():
    theta = sample_angles(make_rng(9), 200_000)
    values = 2.0 / np.cos(theta) ** 2
    for eps in (3.0, 10.0, 100.0):
        assert angle_ccdf(2.0, eps) == pytest.approx(np.mean(values > eps), abs=0.005)


@pytest.mark.parametrize("mode", [UNTRUNCATED_DENSITY, EXACT_TRUNCATION])
def test_truncated_ccdf_limits(mode):
    delta = 0.1
    scale = 1.0
    top = scale / math.sin(delta) ** 2
    assert truncated_angle_ccdf(scale, 1.1 * top, delta, mode) == 0.0
    expected_floor = 1.0 if mode == EXACT_TRUNCATION else (math.pi - 2 * delta) / math.pi
    assert truncated_angle_ccdf(scale, 0.5 * scale, delta, mode) == pytest.approx(expected_floor)


def test_closed_form_ccdf_orderings(params):
    eps = np.geomspace(1e-1, 1e4, 60)
    lower = ccdf_crb_lower(params, eps)
    exact = ccdf_crb_exact(params, eps)
    phi = ccdf_crb_phi(params, eps)
    assert np.all(lower <= exact + 1e-15)
    assert np.all(exact <= phi + 1e-15)
    for curve in (lower, exact, phi):
        assert np.all(np.diff(curve) <= 1e-15)


def test_exact_ccdf_infinite_without_data_beam():
    np.testing.assert_array_equal(ccdf_crb_exact(SystemParams(tau=0.0), [1.0, 1e6]), [1.0, 1.0])


def test_surrogate_ccdfs_bracketed_and_monotone(params):
    eps = np.geomspace(1.0, 1e3, 25)
    upper, se_u = ccdf_crb_upper(params, eps, 50_000, make_rng(4))
    approx, se_a = ccdf_crb_approx(params, eps, 50_000, make_rng(4))
    lower = ccdf_crb_lower(params, eps)
    for curve in (upper, approx):
        assert np.all((curve >= 0) & (curve <= 1))
        assert np.all(np.diff(curve) <= 1e-15)
    assert np.all(approx <= upper + 1e-12)
    assert np.all(approx >= lower - 3 * se_a)


def test_quadrature_mode_agrees_with_analytic_angle_integral(params):
    eps = np.array([3.0, 8.0, 30.0])
    analytic, se = ccdf_crb_upper(params, eps, 200_000, make_rng(5))
    gl, se_gl = ccdf_crb_upper(params, eps, 4_000, make_rng(6), theta_nodes=64)
    np.testing.assert_array_less(np.abs(analytic - gl), 4 * np.hypot(se, se_gl) + 0.01)


def test_scalar_epsilon_returns_floats(params):
    p, se = ccdf_crb_approx(params, 5.0, 10_000, make_rng(1))
    assert isinstance(p, float) and isinstance(se, float)


def test_ergodic_exact_closed_form(params):
    k = angle_scale_exact(params)
    assert ergodic_crb_exact(params) == pytest.approx(k * 2 * math.tan(math.pi / 2 - params.delta) / math.pi)
    ratio = ergodic_crb_exact(params, EXACT_TRUNCATION) / ergodic_crb_exact(params, UNTRUNCATED_DENSITY)
    assert ratio == pytest.approx(math.pi / (math.pi - 2 * params.delta))


@pytest.mark.parametrize("fn", [ergodic_crb_exact, ergodic_crb_phi])
def test_ergodic_infinite_without_data_beam(fn):
    with pytest.raises(InfiniteErgodicCrb):
        fn(SystemParams(tau=0.0))
    with pytest.raises(InfiniteErgodicCrb):
        fn(SystemParams(alpha_mag=0.0))


def test_ergodic_lower_finite_at_zero_split():
    assert math.isfinite(ergodic_crb_lower(SystemParams(tau=0.0)))


def test_ergodic_vanishes_under_full_truncation():
    assert ergodic_crb_exact(SystemParams(delta=math.pi / 2 - 1e-9)) < 1e-6


@pytest.mark.parametrize("tau", [0.2, 0.5, 0.76, 0.95])
def test_ergodic_orderings(tau):
    p = SystemParams(tau=tau)
    approx, se = ergodic_crb_approx(p, 20_000, make_rng(7))
    assert ergodic_crb_phi(p) > ergodic_crb_exact(p)
    assert ergodic_crb_phi(p) > approx
    assert approx >= ergodic_crb_lower(p) - 3 * se


def test_ergodic_approx_meets_exact_without_an():
    p = SystemParams(tau=1.0)
    approx, _ = ergodic_crb_approx(p, 10_000, make_rng(8))
    assert approx == pytest.approx(ergodic_crb_exact(p), rel=1e-12)


def test_ergodic_approx_needs_samples(params):
    with pytest.raises(ValueError):
        ergodic_crb_approx(params, 9_999, make_rng(0))


@given(st.floats(0.01, 1.0))
def test_mean_sec2_modes(delta):
    assert mean_sec2(delta, EXACT_TRUNCATION) >= mean_sec2(delta, UNTRUNCATED_DENSITY)
    with pytest.raises(ValueError):
        mean_sec2(delta, "other")


def test_tail_integral_reproduces_ergodic_value(params):
    k = angle_scale_exact(params)
    median = k / math.cos(math.pi / 4) ** 2
    upper = 1e3 * median
    top = k / math.sin(params.delta) ** 2
    value = ergodic_from_ccdf(
        lambda e: float(truncated_angle_ccdf(k, e, params.delta, EXACT_TRUNCATION)), upper, points=[k, top]
    )
    assert value == pytest.approx(ergodic_crb_exact(params, EXACT_TRUNCATION), rel=0.01)
