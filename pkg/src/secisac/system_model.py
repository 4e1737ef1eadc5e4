"""
Scenario parameters, array geometry and random channel generation.

All complex Gaussians follow the CN(0, 1) convention with unit *total*
variance (each of the real and imaginary parts has variance 1/2), so
``|h_i|**2`` is exponential with mean one and ``||h||**2 ~ Gamma(N, 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Optional

import numpy as np

from .errors import ConfigError

__all__ = [
    "SystemParams",
    "ChannelRealization",
    "make_rng",
    "steering_vector",
    "steering_derivative",
    "phase_offsets",
    "sample_realization",
    "sample_channels",
    "sample_angles",
    "channel_aggregates",
]


@dataclass(frozen=True)
class SystemParams:
    """Scenario constants for the secure ISAC downlink.

    Defaults are the numerical-results scenario: N=15, M=17, N_e=15,
    P=10, sigma_u=sigma_r=1, L=30, c1=c2=sqrt(1e-3), c3=c4=1e-3,
    delta=0.1, |alpha|=0.2. ``tau`` defaults to 0.76, the power split
    used for the CRB CCDF figure.
    """

    n_tx: int = 15
    m_rx: int = 17
    n_eav: int = 15
    frame_len: int = 30
    power: float = 10.0
    tau: float = 0.76
    sigma_u: float = 1.0
    sigma_r: float = 1.0
    c1: complex = math.sqrt(1e-3)
    c2: complex = math.sqrt(1e-3)
    c3: complex = 1e-3
    c4: complex = 1e-3
    alpha_mag: float = 0.2
    phase_alpha: float = 0.0
    phase_beta: float = 0.0
    delta: float = 0.1

    def __post_init__(self):
        for name in ("n_tx", "m_rx", "n_eav", "frame_len"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.n_tx < 3:
            raise ConfigError("n_tx must be at least 3 so the AN nullspace is non-empty")
        if self.frame_len <= self.n_tx:
            raise ConfigError("frame_len must exceed n_tx")
        if not self.power > 0:
            raise ConfigError("power must be positive")
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigError("tau must lie in [0, 1]")
        if not (self.sigma_u > 0 and self.sigma_r > 0):
            raise ConfigError("noise standard deviations must be positive")
        if not 0.0 <= self.alpha_mag <= 1.0:
            raise ConfigError("alpha_mag must lie in [0, 1]")
        if not 0.0 < self.delta < math.pi / 2:
            raise ConfigError("delta must lie in (0, pi/2)")
        for name in ("c1", "c2", "c3", "c4"):
            object.__setattr__(self, name, complex(getattr(self, name)))

    @property
    def alpha(self) -> complex:
        return self.alpha_mag * np.exp(1j * self.phase_alpha)

    @property
    def beta(self) -> complex:
        return math.sqrt(1.0 - self.alpha_mag**2) * np.exp(1j * self.phase_beta)

    @property
    def gamma1(self) -> float:
        """Power on the data beam, P*tau."""
        return self.power * self.tau

    @property
    def gamma2(self) -> float:
        """Power per artificial-noise direction, P(1-tau)/(N-2)."""
        return self.power * (1.0 - self.tau) / (self.n_tx - 2)

    @property
    def q_factor(self) -> float:
        """sigma_r^2 / (2 |c3|^2 L)."""
        return self.sigma_r**2 / (2.0 * abs(self.c3) ** 2 * self.frame_len)

    def replace(self, **changes) -> "SystemParams":
        return replace(self, **changes)

    @classmethod
    def field_names(cls) -> tuple:
        return tuple(f.name for f in fields(cls))


@dataclass(frozen=True)
class ChannelRealization:
    """One independent draw of the random scenario."""

    h: np.ndarray
    h_e: np.ndarray
    theta: float
    phi: float


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for ``(seed, stream)``.

    Streams are keyed rather than spawned sequentially, so stream ``k``
    yields the same numbers no matter which worker consumes it or in what
    order streams are created.
    """
    seq = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(seq))


def phase_offsets(count: int) -> np.ndarray:
    """The integers ``count - (2i - 1)`` for ``i = 1..count``."""
    return count - (2.0 * np.arange(1, count + 1) - 1.0)


def steering_vector(angle, count: int) -> np.ndarray:
    """Half-wavelength ULA response, element ``i`` is ``exp(-j f_i)``.

    ``f_i = pi sin(angle) (count - (2i - 1)) / 2``. ``angle`` may be an
    array, in which case the result has shape ``angle.shape + (count,)``.
    """
    angle = np.asarray(angle, dtype=float)
    f = np.pi * np.sin(angle)[..., None] * phase_offsets(count) / 2.0
    return np.exp(-1j * f)


def steering_derivative(angle, count: int) -> np.ndarray:
    """Elementwise derivative of :func:`steering_vector` with respect to the angle."""
    angle = np.asarray(angle, dtype=float)
    offsets = phase_offsets(count)
    fprime = np.pi * np.cos(angle)[..., None] * offsets / 2.0
    return -1j * fprime * steering_vector(angle, count)


def sample_channels(rng: np.random.Generator, size, n: int) -> np.ndarray:
    """i.i.d. CN(0, 1) entries; ``size`` is ``None``, an int or a shape tuple."""
    if size is None:
        shape = (n,)
    elif isinstance(size, (int, np.integer)):
        shape = (int(size), n)
    else:
        shape = tuple(size) + (n,)
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) / math.sqrt(2.0)


def sample_angles(rng: np.random.Generator, size, half_width: float = math.pi / 2) -> np.ndarray:
    """Uniform angles on ``(-half_width, half_width)``."""
    return rng.uniform(-half_width, half_width, size=size)


def sample_realization(params: SystemParams, rng: np.random.Generator) -> ChannelRealization:
    """Draw ``h``, ``h_e``, ``theta`` and ``phi`` independently, in that order."""
    h = sample_channels(rng, None, params.n_tx)
    h_e = sample_channels(rng, None, params.n_tx)
    theta = float(sample_angles(rng, None))
    phi = float(sample_angles(rng, None))
    return ChannelRealization(h=h, h_e=h_e, theta=theta, phi=phi)


def channel_aggregates(h, theta, phase_shift: Optional[float] = None):
    """Aggregate statistics of a user channel seen through ``a(theta)``.

    Returns ``(R, T, K)`` or, when ``phase_shift`` (``phi_beta - phi_alpha``)
    is given, ``(R, T, K, W)`` where

    * ``R + jT = a(theta)^H h = sum_i exp(j f_i) h_i``
    * ``K = ||h||^2``
    * ``W = Re(exp(j phase_shift) a^H h)``

    ``h`` may be batched as ``(..., N)`` with ``theta`` broadcasting over
    the leading axes.
    """
    h = np.asarray(h)
    n = h.shape[-1]
    proj = np.sum(np.conj(steering_vector(theta, n)) * h, axis=-1)
    big_r = proj.real
    big_t = proj.imag
    big_k = np.sum(np.abs(h) ** 2, axis=-1)
    if phase_shift is None:
        return big_r, big_t, big_k
    big_w = (np.exp(1j * phase_shift) * proj).real
    return big_r, big_t, big_k, big_w
