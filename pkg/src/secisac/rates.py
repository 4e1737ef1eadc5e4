"""
SINR models and ergodic rates (bits per channel use) for the user and the
communication eavesdropper.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate, stats

from .beamforming import BeamformerBasis, basis_for
from .stochastic import DEFAULT_SAMPLES, clt_moments_4d
from .system_model import SystemParams

__all__ = [
    "RateBreakdown",
    "user_snr_scale",
    "sinr_user",
    "sinr_user_expanded",
    "sinr_eav",
    "ergodic_rate_user_exact",
    "ergodic_rate_user_ub1",
    "ergodic_rate_user_ub2",
    "ergodic_rate_user_asymptotes",
    "ergodic_rate_eav",
    "eav_rate_integrand",
    "secrecy_rate",
]

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class RateBreakdown:
    user_rate: float
    eav_rate: float
    secrecy_rate: float
    user_rate_err: float = 0.0
    user_method: str = "clt-expectation"
    eav_method: str = "quadrature"


def user_snr_scale(params: SystemParams) -> float:
    """``P tau |c1|^2 / sigma_u^2``."""
    return params.gamma1 * abs(params.c1) ** 2 / params.sigma_u**2


def _eav_constants(params: SystemParams):
    noise = params.sigma_u**2
    c_sig = params.gamma1 * abs(params.c2) ** 2 / noise
    c_an = params.gamma2 / noise
    return c_sig, c_an


def sinr_user(params: SystemParams, h, theta: float) -> float:
    """User SINR ``(P tau |c1|^2 / sigma_u^2) |h^H t1|^2``.

    AN is confined to the orthogonal complement of ``h`` and contributes
    no interference.

    Raises
    ------
    DegenerateChannel
        Propagated from the basis construction.
    """
    basis = basis_for(params, h, theta)
    return user_snr_scale(params) * abs(np.vdot(h, basis.t1)) ** 2


def sinr_user_expanded(params: SystemParams, big_r, big_t, big_k, big_w, clamp: bool = False):
    """User SINR written in the aggregates ``(R, T, K, W)``.

    ``c [(|a|^2 - |b|^2)/N (R^2 + T^2) + |b|^2 K + 2 |a b| / sqrt(N) W sqrt(K - (R^2+T^2)/N)]``.
    With ``clamp`` the square-root argument is floored at zero; the result
    is then also floored at zero (only surrogate draws with ``K < 0`` reach
    that floor).
    """
    n = params.n_tx
    a2 = params.alpha_mag**2
    b2 = 1.0 - a2
    big_r = np.asarray(big_r, dtype=float)
    big_t = np.asarray(big_t, dtype=float)
    proj = (big_r**2 + big_t**2) / n
    perp = np.asarray(big_k, dtype=float) - proj
    if clamp:
        perp_root = np.sqrt(np.maximum(perp, 0.0))
    else:
        perp_root = np.sqrt(perp)
    gain = (a2 - b2) * proj + b2 * np.asarray(big_k) + 2.0 * math.sqrt(a2 * b2) / math.sqrt(n) * big_w * perp_root
    out = user_snr_scale(params) * gain
    return np.maximum(out, 0.0) if clamp else out


def sinr_eav(params: SystemParams, h_e, basis: BeamformerBasis) -> float:
    """Eavesdropper SINR ``C1 |h_e^H t1|^2 / (1 + C2 sum_{i>=3} |h_e^H t_i|^2)``."""
    c_sig, c_an = _eav_constants(params)
    h_e = np.asarray(h_e, dtype=complex)
    signal = abs(np.vdot(h_e, basis.t1)) ** 2
    leak = float(np.sum(np.abs(h_e.conj() @ basis.null_basis) ** 2))
    return c_sig * signal / (1.0 + c_an * leak)


def ergodic_rate_user_exact(
    params: SystemParams,
    samples: int = DEFAULT_SAMPLES,
    rng: Optional[np.random.Generator] = None,
    method: str = "expectation",
):
    """User ergodic rate over the 4-D CLT surrogate of ``(R, T, K, W)``.

    ``method="expectation"`` averages ``log2(1 + SINR)`` directly;
    ``method="tail-integral"`` integrates the empirical
    ``P(SINR > 2^t - 1)`` over ``t`` on the same draws (cross-check; the
    two agree to round-off).

    Returns ``(value, std_error)``.
    """
    if samples < 10_000:
        raise ValueError("at least 10000 samples are required")
    if params.tau == 0:
        return 0.0, 0.0
    rng = np.random.default_rng(0) if rng is None else rng
    moments = clt_moments_4d(params.n_tx, params.phase_alpha, params.phase_beta)
    z = moments.sample(rng, samples)
    sinr = sinr_user_expanded(params, z[:, 0], z[:, 1], z[:, 2], z[:, 3], clamp=True)
    rate = np.log2(1.0 + sinr)
    err = float(rate.std(ddof=1) / math.sqrt(samples))
    if method == "expectation":
        return float(rate.mean()), err
    if method == "tail-integral":
        # the empirical CCDF of log2(1 + SINR) is a step function, integrated piece by piece
        steps = np.log2(1.0 + np.sort(sinr))
        widths = np.diff(steps, prepend=0.0)
        survivors = (samples - np.arange(samples)) / samples
        return float(np.sum(widths * survivors)), err
    raise ValueError(f"unknown method {method!r}")


def ergodic_rate_user_ub1(params: SystemParams, taylor: bool = False) -> float:
    """Upper bound ``E[log2(1 + c ||h||^2)]`` with ``||h||^2 ~ Gamma(N, 1)``.

    Evaluated by adaptive quadrature against the Gamma density. ``taylor``
    switches to the second-order expansion about ``E||h||^2 = N``.
    """
    c = user_snr_scale(params)
    n = params.n_tx
    if c == 0:
        return 0.0
    if taylor:
        return math.log2(1.0 + c * n) - (c**2 / (1.0 + c * n) ** 2) * n / 2.0 / _LN2
    dist = stats.gamma(a=n)
    upper = dist.isf(1e-16)
    value, _ = integrate.quad(
        lambda x: math.log2(1.0 + c * x) * dist.pdf(x), 0.0, upper, limit=200, points=[n]
    )
    return value


def ergodic_rate_user_ub2(params: SystemParams) -> float:
    """Jensen bound ``log2(1 + c (|alpha|^2 + |beta|^2 (N - 1)))``."""
    a2 = params.alpha_mag**2
    mean_gain = a2 + (1.0 - a2) * (params.n_tx - 1)
    return math.log2(1.0 + user_snr_scale(params) * mean_gain)


def ergodic_rate_user_asymptotes(params: SystemParams):
    """Large-N approximations ``(log2(1 + c |beta|^2 N), log2(1 + c N))``."""
    c = user_snr_scale(params)
    n = params.n_tx
    b2 = 1.0 - params.alpha_mag**2
    return math.log2(1.0 + c * b2 * n), math.log2(1.0 + c * n)


def eav_rate_integrand(params: SystemParams, t):
    """``exp(-T / (2 C1)) (1 + T C2 / C1)^-(N-2)`` with ``T = 2^t - 1``."""
    c_sig, c_an = _eav_constants(params)
    big_t = np.exp2(np.asarray(t, dtype=float)) - 1.0
    return np.exp(-big_t / (2.0 * c_sig)) * (1.0 + big_t * c_an / c_sig) ** (-(params.n_tx - 2))


def _eav_quadrature(params: SystemParams, tol: float = 1e-12):
    """Integral of :func:`eav_rate_integrand` on ``[0, t_max]`` plus a bound on the dropped tail."""
    c_sig, _ = _eav_constants(params)
    # exp(-T/(2 C1)) alone falls below tol at T0; the other factor is <= 1.
    big_t0 = 2.0 * c_sig * math.log(1.0 / tol)
    t_max = math.log2(1.0 + big_t0)
    value, abserr = integrate.quad(
        lambda t: float(eav_rate_integrand(params, t)), 0.0, t_max, epsabs=1e-10, epsrel=1e-10, limit=200
    )
    # For t >= t_max, T >= T0 + (t - t_max) ln2 2^t_max, so the tail is below:
    tail = tol * 2.0 * c_sig / (_LN2 * 2.0**t_max)
    return value, abserr, tail


def ergodic_rate_eav(params: SystemParams) -> float:
    """Communication-eavesdropper ergodic rate as a single integral over ``t``.

    Uses the mean-2 exponential / scale-2 Gamma model for the projected
    eavesdropper channel. Returns 0 when ``tau = 0``.
    """
    if params.tau == 0:
        return 0.0
    value, _, _ = _eav_quadrature(params)
    return value


def secrecy_rate(
    params: SystemParams,
    samples: int = DEFAULT_SAMPLES,
    rng: Optional[np.random.Generator] = None,
) -> RateBreakdown:
    """``(E[R] - E[R_e])^+`` from the surrogate user rate and the quadrature eavesdropper rate."""
    user, user_err = ergodic_rate_user_exact(params, samples, rng)
    eav = ergodic_rate_eav(params)
    return RateBreakdown(
        user_rate=user,
        eav_rate=eav,
        secrecy_rate=max(0.0, user - eav),
        user_rate_err=user_err,
    )
