"""
End-to-end Monte Carlo oracle.

Raw channels and angles are pushed through the beamformer, CRB and SINR
code paths with no Gaussian surrogate involved. Trials are split into
fixed-size chunks, chunk ``k`` always drawing from stream ``k`` of the
master seed, so results do not depend on the number of workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .beamforming import eavesdropper_projections, user_beam_gain
from .crb import crb_phi, crb_theta_common, crb_theta_exact
from .rates import user_snr_scale
from .system_model import SystemParams, make_rng, sample_angles, sample_channels

__all__ = [
    "EmpiricalDistribution",
    "CHUNK",
    "mc_crb_samples",
    "mc_rate_samples",
    "mc_sinr_user_samples",
    "empirical_ccdf",
]

CHUNK = 1 << 15
VARIANTS = ("common", "exact", "eavesdropper")


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Per-trial values; ``+inf`` entries are kept and count toward every CCDF."""

    samples: np.ndarray

    @property
    def count(self) -> int:
        return int(self.samples.size)

    def mean(self):
        """Sample mean and its standard error."""
        x = self.samples
        if not np.all(np.isfinite(x)):
            return math.inf, math.inf
        return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))

    def ccdf(self, threshold):
        return empirical_ccdf(self, threshold)


def empirical_ccdf(dist: EmpiricalDistribution, threshold):
    """Fraction of samples strictly above ``threshold`` with binomial standard error."""
    if dist.count < 1:
        raise ValueError("empty distribution")
    ordered = np.sort(dist.samples)
    thr = np.asarray(threshold, dtype=float)
    above = dist.count - np.searchsorted(ordered, thr, side="right")
    p = above / dist.count
    err = np.sqrt(p * (1.0 - p) / dist.count)
    if thr.ndim == 0:
        return float(p), float(err)
    return p, err


def _run_chunks(fn, trials: int, seed: int, workers: int, stream_offset: int = 0):
    sizes = [min(CHUNK, trials - start) for start in range(0, trials, CHUNK)]
    jobs = [(stream_offset + k, size) for k, size in enumerate(sizes)]

    def run(job):
        stream, size = job
        return fn(make_rng(seed, stream), size)

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(job) for job in jobs]
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate(p) for p in zip(*parts))
    return np.concatenate(parts)


def mc_crb_samples(
    params: SystemParams,
    trials: int,
    variant: str = "common",
    truncate_angles: bool = False,
    seed: int = 0,
    workers: int = 1,
) -> EmpiricalDistribution:
    """Per-trial CRBs from raw draws.

    Parameters
    ----------
    variant : {"common", "exact", "eavesdropper"}
        Common fixed-waveform CRB(theta), exact CRB(theta), or CRB(phi).
    truncate_angles : bool
        Draw angles on ``|angle| <= pi/2 - delta`` (for ergodic comparisons).
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    half = math.pi / 2 - params.delta if truncate_angles else math.pi / 2

    def chunk(rng, size):
        if variant == "common":
            h = sample_channels(rng, size, params.n_tx)
            angle = sample_angles(rng, size, half)
            return np.asarray(crb_theta_common(params, h, angle), dtype=float)
        # the exact and eavesdropper CRBs depend on the angle only
        angle = sample_angles(rng, size, half)
        fn = crb_theta_exact if variant == "exact" else crb_phi
        return np.asarray(fn(params, angle), dtype=float) * np.ones(size)

    return EmpiricalDistribution(_run_chunks(chunk, trials, seed, workers))


def _rate_chunk(params: SystemParams):
    def chunk(rng, size):
        h = sample_channels(rng, size, params.n_tx)
        theta = sample_angles(rng, size)
        h_e = sample_channels(rng, size, params.n_tx)
        gain = user_beam_gain(h, theta, params.alpha, params.beta)
        sinr_u = user_snr_scale(params) * gain
        signal, leak = eavesdropper_projections(h_e, h, theta, params.alpha, params.beta)
        noise = params.sigma_u**2
        sinr_e = (params.gamma1 * abs(params.c2) ** 2 / noise) * signal / (1.0 + params.gamma2 / noise * leak)
        return sinr_u, sinr_e

    return chunk


def mc_sinr_user_samples(params: SystemParams, trials: int, seed: int = 0, workers: int = 1):
    """Raw per-trial ``(SINR_u, SINR_e)`` from physical channel draws."""
    return _run_chunks(_rate_chunk(params), trials, seed, workers)


def mc_rate_samples(params: SystemParams, trials: int, seed: int = 0, workers: int = 1):
    """Per-trial ``log2(1 + SINR)`` for the user and the communication eavesdropper.

    Each trial draws ``h``, ``theta`` and an independent ``h_e``.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    sinr_u, sinr_e = mc_sinr_user_samples(params, trials, seed, workers)
    return EmpiricalDistribution(np.log2(1.0 + sinr_u)), EmpiricalDistribution(np.log2(1.0 + sinr_e))
