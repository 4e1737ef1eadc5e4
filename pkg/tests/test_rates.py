import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from secisac.beamforming import basis_for
from secisac.rates import (
    eav_rate_integrand,
    ergodic_rate_eav,
    ergodic_rate_user_asymptotes,
    ergodic_rate_user_exact,
    ergodic_rate_user_ub1,
    ergodic_rate_user_ub2,
    secrecy_rate,
    sinr_eav,
    sinr_user,
    sinr_user_expanded,
    user_snr_scale,
)
from secisac.system_model import SystemParams, channel_aggregates, make_rng, sample_channels, steering_vector

seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=60)
@given(seeds, st.floats(0, 1), st.floats(0, 1), st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
def test_sinr_forms_agree(seed, tau, alpha_mag, pa, pb):
    rng = make_rng(seed)
    p = SystemParams(tau=tau, alpha_mag=alpha_mag, phase_alpha=pa, phase_beta=pb)
    h = sample_channels(rng, None, p.n_tx)
    theta = float(rng.uniform(-1.5, 1.5))
    direct = sinr_user(p, h, theta)
    r, t, k, w = channel_aggregates(h, theta, pb - pa)
    assert sinr_user_expanded(p, r, t, k, w) == pytest.approx(direct, rel=1e-9, abs=1e-12)


def test_pure_sensing_beam_sinr():
    p = SystemParams(alpha_mag=1.0)
    rng = make_rng(3)
    h = sample_channels(rng, None, p.n_tx)
    a_hat = steering_vector(0.3, p.n_tx) / math.sqrt(p.n_tx)
    expected = user_snr_scale(p) * abs(np.vdot(a_hat, h)) ** 2
    assert sinr_user(p, h, 0.3) == pytest.approx(expected, rel=1e-12)


def test_expanded_clamp():
    p = SystemParams()
    assert sinr_user_expanded(p, 3.0, 3.0, -1.0, 0.5, clamp=True) == 0.0
    with np.errstate(invalid="ignore"):
        assert math.isnan(sinr_user_expanded(p, 3.0, 3.0, 1.0, 0.5))


def test_eav_sinr_without_an():
    p = SystemParams(tau=1.0)
    rng = make_rng(8)
    h, h_e = sample_channels(rng, 2, p.n_tx)
    basis = basis_for(p, h, 0.1)
    expected = p.power * abs(p.c2) ** 2 / p.sigma_u**2 * abs(np.vdot(h_e, basis.t1)) ** 2
    assert sinr_eav(p, h_e, basis) == pytest.approx(expected, rel=1e-12)


def test_eav_projection_distributions():
    # physical channels give a mean-1 exponential signal term and Gamma(N-2, 1) leakage
    p = SystemParams()
    rng = make_rng(12)
    signal, leak = [], []
    for _ in range(4000):
        h, h_e = sample_channels(rng, 2, p.n_tx)
        basis = basis_for(p, h, float(rng.uniform(-1.5, 1.5)))
        signal.append(abs(np.vdot(h_e, basis.t1)) ** 2)
        leak.append(np.sum(np.abs(h_e.conj() @ basis.null_basis) ** 2))
    assert np.mean(signal) == pytest.approx(1.0, rel=0.06)
    assert np.mean(leak) == pytest.approx(p.n_tx - 2, rel=0.02)
    assert stats.kstest(signal, stats.expon().cdf).pvalue > 0.01
    assert stats.kstest(leak, stats.gamma(p.n_tx - 2).cdf).pvalue > 0.01


def test_zero_split_gives_zero_rates():
    p = SystemParams(tau=0.0)
    assert ergodic_rate_user_exact(p, 10_000, make_rng(0)) == (0.0, 0.0)
    assert ergodic_rate_eav(p) == 0.0
    assert secrecy_rate(p, 10_000, make_rng(0)).secrecy_rate == 0.0


def test_user_rate_needs_samples(params):
    with pytest.raises(ValueError):
        ergodic_rate_user_exact(params, 9_999, make_rng(0))


def test_user_rate_methods_agree(params):
    a, se = ergodic_rate_user_exact(params, 50_000, make_rng(1))
    b, _ = ergodic_rate_user_exact(params, 50_000, make_rng(1), method="tail-integral")
    assert a == pytest.approx(b, rel=1e-9)


@pytest.mark.parametrize("tau", [0.1, 0.5, 0.76, 1.0])
def test_user_rate_below_bounds(tau):
    p = SystemParams(tau=tau)
    value, se = ergodic_rate_user_exact(p, 50_000, make_rng(2))
    assert value <= ergodic_rate_user_ub1(p) + 3 * se
    assert value <= ergodic_rate_user_ub2(p) + 3 * se
    assert ergodic_rate_user_ub2(p) - value < 0.5


def test_gamma_density_normalised():
    value, _ = integrate.quad(stats.gamma(a=15).pdf, 0, stats.gamma(a=15).isf(1e-16), points=[15])
    assert value == pytest.approx(1.0, abs=1e-10)


def test_ub1_taylor_close_to_quadrature(params):
    assert ergodic_rate_user_ub1(params, taylor=True) == pytest.approx(ergodic_rate_user_ub1(params), rel=1e-3)


def test_ub2_pure_sensing():
    p = SystemParams(alpha_mag=1.0)
    assert ergodic_rate_user_ub2(p) == pytest.approx(math.log2(1 + user_snr_scale(p)))


def test_ub1_massive_mimo_limit():
    gaps = []
    # the Taylor gap c^2 N / (2 (1 + cN)^2 ln 2) only shrinks once cN > 1
    for n in (256, 1024, 4096):
        p = SystemParams(n_tx=n, frame_len=n + 10)
        gaps.append(abs(ergodic_rate_user_ub1(p) - ergodic_rate_user_asymptotes(p)[1]))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 1e-3


def test_massive_mimo_sandwich():
    # the lower asymptote is |beta|^2 N, above the exact mean gain |alpha|^2 + |beta|^2 (N-1)
    # when |alpha|^2 < 1/2, so it is only approached to within ~0.3% here
    p = SystemParams(n_tx=256, frame_len=300)
    value, se = ergodic_rate_user_exact(p, 50_000, make_rng(3))
    low, high = ergodic_rate_user_asymptotes(p)
    assert value <= high + 3 * se
    assert value >= low * (1 - 0.01)


def test_eav_integrand_properties(params):
    assert eav_rate_integrand(params, 0.0) == 1.0
    c1 = params.gamma1 * abs(params.c2) ** 2
    t = np.linspace(0, math.log2(1 + 40 * c1), 200)
    f = eav_rate_integrand(params, t)
    assert np.all(f > 0)
    assert np.all(np.diff(f) < 0)


@pytest.mark.parametrize("tau", [0.1, 0.5, 1.0])
def test_eav_rate_matches_stated_distributions(tau):
    p = SystemParams(tau=tau)
    rng = make_rng(4)
    x = rng.exponential(2.0, 400_000)
    y = rng.gamma(p.n_tx - 2, 2.0, 400_000)
    c1 = p.gamma1 * abs(p.c2) ** 2
    c2 = p.gamma2
    mc = np.log2(1 + c1 * x / (1 + c2 * y))
    assert ergodic_rate_eav(p) == pytest.approx(mc.mean(), abs=4 * mc.std() / math.sqrt(mc.size))


def test_eav_rate_increasing_in_split():
    values = [ergodic_rate_eav(SystemParams(tau=t)) for t in np.linspace(0.05, 1, 20)]
    assert np.all(np.diff(values) > 0)


def test_secrecy_breakdown(params):
    out = secrecy_rate(params, 20_000, make_rng(5))
    assert out.secrecy_rate == pytest.approx(max(0.0, out.user_rate - out.eav_rate))
    assert out.secrecy_rate > 0
