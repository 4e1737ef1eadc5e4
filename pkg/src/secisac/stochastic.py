"""
Distributional analysis of the angle CRBs.

The aggregates ``(R, T, K[, W])`` of a Rayleigh channel seen through a
steering vector are replaced by their multivariate-normal CLT surrogate.
Probabilities over that surrogate are computed by plain Monte Carlo with
a reported standard error. The angle enters every CRB only through
``1/cos^2``, so for a fixed aggregate draw the angular integral is done in
closed form (``P(k / cos^2 > eps) = (2/pi) asin(sqrt(k / eps))`` for a
uniform angle); a Gauss-Legendre outer rule is kept as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .crb import angle_scale_common, angle_scale_exact, angle_scale_phi, crb_bracket
from .errors import InfiniteErgodicCrb
from .system_model import SystemParams

__all__ = [
    "GaussianMoments",
    "CcdfCurve",
    "MODES",
    "clt_moments_3d",
    "clt_moments_4d",
    "gaussian_domain_probability",
    "angle_ccdf",
    "truncated_angle_ccdf",
    "mean_sec2",
    "ccdf_crb_lower",
    "ccdf_crb_upper",
    "ccdf_crb_approx",
    "ccdf_crb_exact",
    "ccdf_crb_phi",
    "ergodic_crb_exact",
    "ergodic_crb_lower",
    "ergodic_crb_approx",
    "ergodic_crb_phi",
    "ergodic_from_ccdf",
]


UNTRUNCATED_DENSITY = "paper-verbatim"
EXACT_TRUNCATION = "exact-truncation"
MODES = (UNTRUNCATED_DENSITY, EXACT_TRUNCATION)

DEFAULT_SAMPLES = 100_000


@dataclass(frozen=True)
class GaussianMoments:
    """Mean and covariance of the CLT surrogate for the channel aggregates."""

    mean: np.ndarray
    covariance: np.ndarray

    @property
    def dim(self) -> int:
        return self.mean.size

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        # eigh handles the rank-deficient 4-D covariance (W is a combination of R and T)
        return rng.multivariate_normal(self.mean, self.covariance, size=count, method="eigh")


@dataclass(frozen=True)
class CcdfCurve:
    thresholds: np.ndarray
    probabilities: np.ndarray
    error_bars: np.ndarray


def clt_moments_3d(n_tx: int) -> GaussianMoments:
    """``(R, T, K) ~ N([0, 0, N], diag(N/2, N/2, N))`` for any angle."""
    n = float(n_tx)
    return GaussianMoments(
        mean=np.array([0.0, 0.0, n]),
        covariance=np.diag([n / 2.0, n / 2.0, n]),
    )


def clt_moments_4d(n_tx: int, phase_alpha: float, phase_beta: float) -> GaussianMoments:
    """Surrogate for ``(R, T, K, W)``; ``W`` correlates with ``R`` and ``T`` through ``phi_alpha - phi_beta``."""
    n = float(n_tx)
    d = phase_alpha - phase_beta
    cov = np.array(
        [
            [0.5, 0.0, 0.0, 0.5 * math.cos(d)],
            [0.0, 0.5, 0.0, 0.5 * math.sin(d)],
            [0.0, 0.0, 1.0, 0.0],
            [0.5 * math.cos(d), 0.5 * math.sin(d), 0.0, 0.5],
        ]
    )
    return GaussianMoments(mean=np.array([0.0, 0.0, n, 0.0]), covariance=n * cov)


def gaussian_domain_probability(
    moments: GaussianMoments,
    indicator: Callable[[np.ndarray], np.ndarray],
    samples: int,
    rng: np.random.Generator,
):
    """Monte Carlo estimate of ``P(indicator(Z))`` for ``Z ~ N(mean, covariance)``.

    ``indicator`` receives a ``(samples, dim)`` array and returns booleans.
    Returns ``(probability, std_error)`` with ``std_error = sqrt(p(1-p)/samples)``.
    """
    if samples < 1000:
        raise ValueError("at least 1000 samples are required")
    z = moments.sample(rng, samples)
    hits = np.asarray(indicator(z), dtype=bool)
    p = float(hits.mean())
    return p, math.sqrt(p * (1.0 - p) / samples)


def angle_ccdf(scale, epsilon):
    """``P(scale / cos^2(theta) > eps)`` for ``theta ~ U(-pi/2, pi/2)``.

    ``(2/pi) asin(sqrt(scale/eps))`` clamped to 1. ``scale = inf`` gives 1.
    """
    scale = np.asarray(scale, dtype=float)
    eps = np.asarray(epsilon, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(np.isinf(scale), 1.0, scale / eps)
    arg = np.sqrt(np.clip(ratio, 0.0, 1.0))
    return (2.0 / math.pi) * np.arcsin(arg)


def _angle_norm(delta: float, mode: str) -> float:
    if mode == UNTRUNCATED_DENSITY:
        return math.pi
    if mode == EXACT_TRUNCATION:
        return math.pi - 2.0 * delta
    raise ValueError(f"unknown averaging mode {mode!r}")


def truncated_angle_ccdf(scale: float, epsilon, delta: float, mode: str = EXACT_TRUNCATION):
    """CCDF of ``scale / cos^2(theta)`` with ``theta`` restricted to ``|theta| <= pi/2 - delta``.

    In ``paper-verbatim`` mode the truncated interval keeps the density
    ``1/pi`` of the untruncated angle, so total mass is ``(pi - 2 delta) / pi``;
    ``exact-truncation`` renormalises to a proper uniform law.
    """
    eps = np.asarray(epsilon, dtype=float)
    with np.errstate(divide="ignore"):
        x = np.sqrt(np.clip(scale / eps, 0.0, 1.0))
    width = np.clip((math.pi / 2 - delta) - np.arccos(x), 0.0, None)
    return 2.0 * width / _angle_norm(delta, mode)


def mean_sec2(delta: float, mode: str = UNTRUNCATED_DENSITY) -> float:
    """Average of ``1/cos^2`` over the truncated angle domain: ``2 tan(pi/2 - delta) / norm``."""
    return 2.0 * math.tan(math.pi / 2 - delta) / _angle_norm(delta, mode)


def ccdf_crb_lower(params: SystemParams, epsilon):
    """Closed-form lower bound on ``P(CRB(theta) > eps)`` (common model)."""
    scale = angle_scale_common(params) / crb_bracket(params, "lower")
    return angle_ccdf(scale, epsilon)


def ccdf_crb_exact(params: SystemParams, epsilon):
    """``P(CRB(theta) > eps)`` for the exact model."""
    return angle_ccdf(angle_scale_exact(params), epsilon)


def ccdf_crb_phi(params: SystemParams, epsilon):
    """``P(CRB(phi) > eps)`` at the sensing eavesdropper."""
    return angle_ccdf(angle_scale_phi(params), epsilon)


def _bracket_ccdf(params, kind, epsilon, samples, rng, theta_nodes):
    moments = clt_moments_3d(params.n_tx)
    scale = angle_scale_common(params)
    eps = np.atleast_1d(np.asarray(epsilon, dtype=float))

    if theta_nodes is None:
        rtk = moments.sample(rng, samples)
        bracket = crb_bracket(params, kind, rtk[:, 0], rtk[:, 1], rtk[:, 2])
        with np.errstate(divide="ignore"):
            per_draw = np.where(bracket > 0, scale / bracket, math.inf)
        probs = np.empty(eps.size)
        errs = np.empty(eps.size)
        for i, e in enumerate(eps):
            cond = angle_ccdf(per_draw, e)
            probs[i] = cond.mean()
            errs[i] = cond.std(ddof=1) / math.sqrt(samples)
    else:
        nodes, weights = np.polynomial.legendre.leggauss(int(theta_nodes))
        thetas = nodes * math.pi / 2
        weights = weights / 2.0  # sums to one
        probs = np.zeros(eps.size)
        var = np.zeros(eps.size)
        for i, e in enumerate(eps):
            for th, w in zip(thetas, weights):
                cos2 = math.cos(th) ** 2

                def exceeds(z, cos2=cos2, e=e):
                    b = crb_bracket(params, kind, z[:, 0], z[:, 1], z[:, 2])
                    return (b <= 0) | (scale > e * cos2 * b)

                p, se = gaussian_domain_probability(moments, exceeds, samples, rng)
                probs[i] += w * p
                var[i] += (w * se) ** 2
        errs = np.sqrt(var)

    if np.ndim(epsilon) == 0:
        return float(probs[0]), float(errs[0])
    return probs, errs


def ccdf_crb_upper(
    params: SystemParams,
    epsilon,
    samples: int = DEFAULT_SAMPLES,
    rng: Optional[np.random.Generator] = None,
    theta_nodes: Optional[int] = None,
):
    """Upper bound on ``P(CRB(theta) > eps)`` over the CLT surrogate.

    Parameters
    ----------
    epsilon : float or array
        Thresholds; all share the same surrogate draws.
    samples : int
        Surrogate draws of ``(R, T, K)`` (per angle node in quadrature mode).
    rng : Generator
        Random stream; a fresh default stream when omitted.
    theta_nodes : int, optional
        Use a Gauss-Legendre rule with this many angle nodes instead of the
        exact per-draw angular integral.

    Returns
    -------
    (probability, std_error)
        Floats for scalar ``epsilon``, arrays otherwise.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    return _bracket_ccdf(params, "upper", epsilon, samples, rng, theta_nodes)


def ccdf_crb_approx(
    params: SystemParams,
    epsilon,
    samples: int = DEFAULT_SAMPLES,
    rng: Optional[np.random.Generator] = None,
    theta_nodes: Optional[int] = None,
):
    """Approximation of ``P(CRB(theta) > eps)``; same interface as :func:`ccdf_crb_upper`."""
    rng = np.random.default_rng(0) if rng is None else rng
    return _bracket_ccdf(params, "approx", epsilon, samples, rng, theta_nodes)


def _require_data_beam(params: SystemParams):
    if params.tau <= 0 or params.alpha_mag <= 0:
        raise InfiniteErgodicCrb("no data-beam power reaches the target (tau = 0 or alpha = 0)")


def ergodic_crb_exact(params: SystemParams, mode: str = UNTRUNCATED_DENSITY) -> float:
    """``E[CRB(theta)]`` of the exact model over the truncated angle domain."""
    _require_data_beam(params)
    return angle_scale_exact(params) * mean_sec2(params.delta, mode)


def ergodic_crb_lower(params: SystemParams, mode: str = UNTRUNCATED_DENSITY) -> float:
    """Closed-form lower bound on the common-model ergodic CRB; finite for ``tau = 0`` too."""
    bracket = crb_bracket(params, "lower")
    if bracket <= 0:
        raise InfiniteErgodicCrb("no transmit power reaches the target")
    return angle_scale_common(params) / bracket * mean_sec2(params.delta, mode)


def ergodic_crb_phi(params: SystemParams, mode: str = UNTRUNCATED_DENSITY) -> float:
    """``E[CRB(phi)]`` at the sensing eavesdropper over the truncated angle domain."""
    _require_data_beam(params)
    return angle_scale_phi(params) * mean_sec2(params.delta, mode)


def ergodic_crb_approx(
    params: SystemParams,
    samples: int = DEFAULT_SAMPLES,
    rng: Optional[np.random.Generator] = None,
    mode: str = UNTRUNCATED_DENSITY,
):
    """``E[ACRB(theta)]`` over the truncated angle and the ``(R, T, K)`` surrogate.

    Angle and aggregates are independent, so the estimate is
    ``mean_sec2 * scale * mean(1 / B)`` over surrogate draws. The AN factor
    ``1 - 1/(K - (R^2+T^2)/N)`` is floored at zero (see
    :func:`crb_bracket`): the surrogate puts mass on ``K - (R^2+T^2)/N <= 1``
    where a physical channel almost never goes, and without the floor the
    mean is infinite.

    Returns ``(value, std_error)``.
    """
    if samples < 10_000:
        raise ValueError("at least 10000 samples are required")
    _require_data_beam(params)
    rng = np.random.default_rng(0) if rng is None else rng
    rtk = clt_moments_3d(params.n_tx).sample(rng, samples)
    bracket = crb_bracket(params, "approx", rtk[:, 0], rtk[:, 1], rtk[:, 2], floor_an=True)
    inv = 1.0 / bracket
    factor = angle_scale_common(params) * mean_sec2(params.delta, mode)
    value = factor * inv.mean()
    err = factor * inv.std(ddof=1) / math.sqrt(samples)
    return float(value), float(err)


def ergodic_from_ccdf(ccdf: Callable[[float], float], upper: float, points=None) -> float:
    """``int_0^upper ccdf(t) dt`` by adaptive quadrature (the tail-integral identity)."""
    value, _ = integrate.quad(ccdf, 0.0, upper, limit=500, points=points)
    return value
