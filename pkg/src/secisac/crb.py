"""
Fisher information and Cramer-Rao bounds for the target angle.

Three routes to CRB(theta) under the common (fixed-waveform) model are
provided and are expected to agree to round-off:

* :func:`crb_theta_common` -- closed form in the channel aggregates,
* :func:`crb_theta_trace` -- trace expression in ``A(theta)`` and ``R_x``,
* :func:`crb_theta_numeric` -- Schur complement of a numerically assembled FIM.

The CRB of the exact model (AN orthogonal to ``a(theta)``) and of the
sensing eavesdropper are plain closed forms. Bounds and approximations
that act on ``(R, T, K)`` are exposed through :func:`crb_bracket` so the
stochastic layer can feed Gaussian surrogate samples into the same
expressions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .beamforming import basis_for, build_waveform, transmit_covariance
from .system_model import SystemParams, channel_aggregates, phase_offsets, steering_derivative, steering_vector

__all__ = [
    "FimBlocks",
    "fim_complex_gaussian",
    "crb_from_blocks",
    "crb_theta_common",
    "crb_theta_trace",
    "crb_theta_numeric",
    "crb_theta_exact",
    "crb_theta_collapsed_numeric",
    "crb_phi",
    "crb_theta_lower",
    "crb_theta_upper",
    "crb_theta_approx",
    "crb_bracket",
    "angle_scale_common",
    "angle_scale_exact",
    "angle_scale_phi",
    "SCHUR_FLOOR",
]

# Relative floor below which an information quantity is treated as zero.
SCHUR_FLOOR = 1e-14


@dataclass(frozen=True)
class FimBlocks:
    """FIM for ``xi = [angle, Re(gain), Im(gain)]`` split into angle and nuisance blocks."""

    f_theta_theta: float
    f_theta_alpha: np.ndarray
    f_alpha_alpha: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        out = np.empty((3, 3))
        out[0, 0] = self.f_theta_theta
        out[0, 1:] = self.f_theta_alpha
        out[1:, 0] = self.f_theta_alpha
        out[1:, 1:] = self.f_alpha_alpha
        return out

    @classmethod
    def from_matrix(cls, fim) -> "FimBlocks":
        fim = np.asarray(fim, dtype=float)
        return cls(float(fim[0, 0]), fim[0, 1:].copy(), fim[1:, 1:].copy())


def fim_complex_gaussian(mean_derivatives, noise_var: float) -> FimBlocks:
    """FIM of ``y ~ CN(u(xi), noise_var I)`` with a parameter-free covariance.

    ``F_ij = (2 / noise_var) Re<du/dxi_i, du/dxi_j>``.

    Parameters
    ----------
    mean_derivatives : sequence of 3 complex arrays
        ``du/dxi`` for the angle and the real/imaginary parts of the gain.
        Arrays are flattened, so matrices may be passed as-is.
    noise_var : float
        Per-entry complex noise variance.
    """
    d = np.stack([np.ravel(np.asarray(v, dtype=complex)) for v in mean_derivatives])
    fim = (2.0 / noise_var) * np.real(d.conj() @ d.T)
    fim = 0.5 * (fim + fim.T)
    return FimBlocks.from_matrix(fim)


def crb_from_blocks(blocks: FimBlocks, with_reason: bool = False):
    """Angle CRB ``[F_tt - F_ta F_aa^{-1} F_at]^{-1}`` with nuisance gain.

    Returns ``inf`` when the nuisance block is singular (reason
    ``"singular_nuisance"``) or when the Schur complement does not exceed
    ``SCHUR_FLOOR * F_tt`` (reason ``"unidentifiable"``).
    """
    f_tt = blocks.f_theta_theta
    f_ta = np.asarray(blocks.f_theta_alpha, dtype=float)
    f_aa = np.asarray(blocks.f_alpha_alpha, dtype=float)
    if not np.any(f_ta):
        schur = f_tt
    else:
        scale = max(np.abs(f_aa).max(), np.finfo(float).tiny)
        if np.linalg.cond(f_aa / scale) > 1.0 / SCHUR_FLOOR:
            return (math.inf, "singular_nuisance") if with_reason else math.inf
        schur = f_tt - f_ta @ np.linalg.solve(f_aa, f_ta)
    if not schur > SCHUR_FLOOR * abs(f_tt):
        return (math.inf, "unidentifiable") if with_reason else math.inf
    value = 1.0 / schur
    return (value, "ok") if with_reason else value


def _finite_ratio(numer, denom, scale):
    """``numer / denom`` with ``inf`` wherever ``denom <= SCHUR_FLOOR * scale``."""
    denom = np.asarray(denom, dtype=float)
    ok = denom > SCHUR_FLOOR * scale
    out = np.full(denom.shape, math.inf)
    with np.errstate(over="ignore"):  # overflow to inf is the right answer
        np.divide(numer, denom, out=out, where=ok)
    return out[()] if out.ndim == 0 else out


def _lower_bracket(params: SystemParams) -> float:
    n, m = params.n_tx, params.m_rx
    return params.gamma1 * params.alpha_mag**2 * (m * m - 1) + params.gamma2 * (n * n - 1)


def angle_scale_common(params: SystemParams) -> float:
    """``6 sigma_r^2 / (L |c3|^2 pi^2 M N)``: common-model CRB = scale / (cos^2 * bracket)."""
    return 6.0 * params.sigma_r**2 / (
        params.frame_len * abs(params.c3) ** 2 * math.pi**2 * params.m_rx * params.n_tx
    )


def angle_scale_exact(params: SystemParams) -> float:
    """``CRB_exact(theta) * cos^2(theta)``; ``inf`` when the data beam misses the target."""
    m = params.m_rx
    denom = (
        params.frame_len * abs(params.c3) ** 2 * params.gamma1 * params.n_tx
        * params.alpha_mag**2 * math.pi**2 * m * (m * m - 1)
    )
    return 6.0 * params.sigma_r**2 / denom if denom > 0 else math.inf


def angle_scale_phi(params: SystemParams) -> float:
    """``CRB(phi) * cos^2(phi)`` at the sensing eavesdropper."""
    ne = params.n_eav
    denom = (
        params.frame_len * abs(params.c4) ** 2 * params.gamma1 * params.n_tx
        * params.alpha_mag**2 * math.pi**2 * ne * (ne * ne - 1)
    )
    return 6.0 * params.sigma_r**2 / denom if denom > 0 else math.inf


def crb_theta_common(params: SystemParams, h, theta):
    """Closed-form CRB(theta) when the waveform is treated as known and fixed.

    ``Q / (g1 ||b'||^2 N |alpha|^2 + g2 M (||a'||^2 - |a'^H h|^2 / (K - |a^H h|^2 / N)))``
    with ``|a'^H h|^2 = (sum -f'_i t_i)^2 + (sum f'_i r_i)^2`` and
    ``r_i + j t_i = exp(j f_i) h_i``. Vectorised over leading axes of ``h``
    and ``theta``; returns ``inf`` where the denominator vanishes.
    """
    n, m = params.n_tx, params.m_rx
    h = np.asarray(h, dtype=complex)
    theta = np.asarray(theta, dtype=float)
    cos2 = np.cos(theta) ** 2
    z = np.conj(steering_vector(theta, n)) * h  # r_i + j t_i
    fprime = np.pi * np.cos(theta)[..., None] * phase_offsets(n) / 2.0
    r = z.real
    t = z.imag
    big_r = r.sum(axis=-1)
    big_t = t.sum(axis=-1)
    big_k = (np.abs(h) ** 2).sum(axis=-1)
    proj_sq = np.sum(-fprime * t, axis=-1) ** 2 + np.sum(fprime * r, axis=-1) ** 2
    perp = big_k - (big_r**2 + big_t**2) / n
    bprime_sq = math.pi**2 * cos2 * m * (m * m - 1) / 12.0
    aprime_sq = math.pi**2 * cos2 * n * (n * n - 1) / 12.0
    with np.errstate(divide="ignore", invalid="ignore"):
        an_term = np.where(perp > 0, aprime_sq - proj_sq / perp, -math.inf)
    denom = params.gamma1 * bprime_sq * n * params.alpha_mag**2
    if params.gamma2 > 0:
        denom = denom + params.gamma2 * m * an_term
    scale = math.pi**2 * m * n / 12.0 * _lower_bracket(params)
    return _finite_ratio(params.q_factor, denom, scale)


def _echo_matrices(params: SystemParams, theta: float):
    a = steering_vector(theta, params.n_tx)
    da = steering_derivative(theta, params.n_tx)
    b = steering_vector(theta, params.m_rx)
    db = steering_derivative(theta, params.m_rx)
    big_a = np.outer(b, a.conj())
    big_da = np.outer(db, a.conj()) + np.outer(b, da.conj())
    return big_a, big_da


def crb_theta_trace(params: SystemParams, h, theta: float) -> float:
    """CRB(theta) from the trace expression in ``A = b a^H`` and the transmit covariance.

    ``sigma^2 t0 / (2 |c3|^2 L (t0 t1 - |t2|^2))`` with ``t0 = Tr(A^H A R_x)``,
    ``t1 = Tr(A'^H A' R_x)``, ``t2 = Tr(A'^H A R_x)``.
    """
    basis = basis_for(params, h, theta)
    rx = transmit_covariance(basis, params)
    big_a, big_da = _echo_matrices(params, theta)
    t0 = np.real(np.trace(big_a.conj().T @ big_a @ rx))
    t1 = np.real(np.trace(big_da.conj().T @ big_da @ rx))
    t2 = np.trace(big_da.conj().T @ big_a @ rx)
    denom = t0 * t1 - abs(t2) ** 2
    if not denom > SCHUR_FLOOR * abs(t0 * t1):
        return math.inf
    return params.sigma_r**2 * t0 / (2.0 * abs(params.c3) ** 2 * params.frame_len * denom)


def crb_theta_numeric(params: SystemParams, h, theta: float, rng: np.random.Generator) -> float:
    """CRB(theta) from the FIM of ``vec(c3 A(theta) X)`` with a fixed realised waveform ``X``."""
    basis = basis_for(params, h, theta)
    x = build_waveform(basis, params, rng).x
    big_a, big_da = _echo_matrices(params, theta)
    ax = (big_a @ x).ravel(order="F")
    dax = (big_da @ x).ravel(order="F")
    blocks = fim_complex_gaussian([params.c3 * dax, ax, 1j * ax], params.sigma_r**2)
    return crb_from_blocks(blocks)


def crb_theta_exact(params: SystemParams, theta):
    """CRB(theta) when AN is recognised as orthogonal to ``a(theta)``.

    ``6 sigma_r^2 / (L |c3|^2 P tau N |alpha|^2 pi^2 cos^2(theta) M (M^2 - 1))``;
    ``inf`` for ``tau = 0``, ``alpha = 0`` or ``cos(theta) = 0``.
    """
    scale = angle_scale_exact(params)
    cos2 = np.cos(np.asarray(theta, dtype=float)) ** 2
    if math.isinf(scale):
        return np.full(cos2.shape, math.inf)[()]
    return _finite_ratio(scale, cos2, 1.0)


def crb_theta_collapsed_numeric(params: SystemParams, theta: float, rng: np.random.Generator) -> float:
    """Numeric FIM route for the collapsed echo ``alpha c3 sqrt(N P tau) b(theta) s_u``."""
    length = params.frame_len
    s = rng.standard_normal(length) + 1j * rng.standard_normal(length)
    s_u = s * math.sqrt(length) / np.linalg.norm(s)
    b = steering_vector(theta, params.m_rx)
    db = steering_derivative(theta, params.m_rx)
    gain = params.alpha * math.sqrt(params.n_tx * params.gamma1)
    bs = gain * np.outer(b, s_u).ravel(order="F")
    dbs = gain * np.outer(db, s_u).ravel(order="F")
    blocks = fim_complex_gaussian([params.c3 * dbs, bs, 1j * bs], params.sigma_r**2)
    return crb_from_blocks(blocks)


def crb_phi(params: SystemParams, phi):
    """CRB of the target angle at the sensing eavesdropper (which knows ``X``).

    ``sigma_r^2 / (2 |c4|^2 L P tau ||c'||^2 |alpha|^2 N)`` with
    ``||c'||^2 = pi^2 cos^2(phi) N_e (N_e^2 - 1) / 12``.
    """
    scale = angle_scale_phi(params)
    cos2 = np.cos(np.asarray(phi, dtype=float)) ** 2
    if math.isinf(scale):
        return np.full(cos2.shape, math.inf)[()]
    return _finite_ratio(scale, cos2, 1.0)


def crb_bracket(params: SystemParams, kind: str, big_r=None, big_t=None, big_k=None, floor_an: bool = False):
    """Bracket ``B`` such that a CRB variant equals ``angle_scale_common / (cos^2 B)``.

    ``kind`` is one of

    * ``"lower"``  -- AN cross term dropped entirely (no aggregates needed);
    * ``"upper"``  -- cross term replaced by its Cauchy-Schwarz bound ``K ||a'||^2``;
    * ``"approx"`` -- cross term replaced by its mean ``||a'||^2``.

    Aggregates where the AN term is undefined (``K <= 0`` or
    ``K <= (R^2 + T^2)/N``) yield ``B = 0``, i.e. an infinite CRB, as does
    any non-positive bracket. ``B`` is therefore always ``>= 0``.

    With ``floor_an`` the AN factor is instead floored at zero wherever it
    would be negative or undefined, so ``B`` never drops below the data
    term. Used for expectations over the Gaussian surrogate, whose tail
    otherwise makes the mean of ``1/B`` diverge.
    """
    n, m = params.n_tx, params.m_rx
    data_term = params.gamma1 * params.alpha_mag**2 * (m * m - 1)
    an_weight = params.gamma2 * (n * n - 1)
    if kind == "lower":
        return data_term + an_weight
    big_r = np.asarray(big_r, dtype=float)
    big_t = np.asarray(big_t, dtype=float)
    big_k = np.asarray(big_k, dtype=float)
    perp = big_k - (big_r**2 + big_t**2) / n
    valid = (big_k > 0) & (perp > 0)
    safe_perp = np.where(valid, perp, 1.0)
    if kind == "upper":
        factor = 1.0 - big_k / safe_perp
    elif kind == "approx":
        factor = 1.0 - 1.0 / safe_perp
    else:
        raise ValueError(f"unknown bracket kind {kind!r}")
    if floor_an:
        return data_term + an_weight * np.where(valid, np.maximum(factor, 0.0), 0.0)
    bracket = data_term + an_weight * factor
    return np.where(valid & (bracket > 0), bracket, 0.0)


def _bracketed_crb(params, theta, bracket):
    cos2 = np.cos(np.asarray(theta, dtype=float)) ** 2
    denom = cos2 * bracket
    return _finite_ratio(angle_scale_common(params), denom, _lower_bracket(params))


def crb_theta_lower(params: SystemParams, theta):
    """LCRB: common-model CRB(theta) with the AN cross term dropped."""
    return _bracketed_crb(params, theta, crb_bracket(params, "lower"))


def crb_theta_upper(params: SystemParams, h, theta):
    """UCRB for a physical channel draw (Cauchy-Schwarz on the AN cross term)."""
    big_r, big_t, big_k = channel_aggregates(h, theta)
    return _bracketed_crb(params, theta, crb_bracket(params, "upper", big_r, big_t, big_k))


def crb_theta_approx(params: SystemParams, h, theta):
    """ACRB for a physical channel draw (AN cross term replaced by its mean)."""
    big_r, big_t, big_k = channel_aggregates(h, theta)
    return _bracketed_crb(params, theta, crb_bracket(params, "approx", big_r, big_t, big_k))
