"""
Closed-form AN-aided precoder.

The BS splits its power between a data beam ``t1 = alpha*a_hat + beta*h_hat``
living in ``span{a(theta), h}`` and artificial noise spread evenly over an
orthonormal basis ``G`` of the orthogonal complement of that span.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateChannel
from .system_model import SystemParams, steering_vector

__all__ = [
    "BeamformerBasis",
    "WaveformBlock",
    "build_basis",
    "basis_for",
    "transmit_covariance",
    "build_waveform",
    "user_beam_gain",
    "eavesdropper_projections",
]

_COLLINEAR_RTOL = 1e-12


@dataclass(frozen=True)
class BeamformerBasis:
    a_hat: np.ndarray
    h_hat: np.ndarray
    null_basis: np.ndarray
    t1: np.ndarray

    @property
    def unitary(self) -> np.ndarray:
        """``[a_hat, h_hat, G]`` as an N x N matrix."""
        return np.column_stack([self.a_hat, self.h_hat, self.null_basis])

    @property
    def null_projector(self) -> np.ndarray:
        """``I - a_hat a_hat^H - h_hat h_hat^H``; independent of the choice of ``G``."""
        n = self.a_hat.size
        return (
            np.eye(n)
            - np.outer(self.a_hat, self.a_hat.conj())
            - np.outer(self.h_hat, self.h_hat.conj())
        )


@dataclass(frozen=True)
class WaveformBlock:
    s_u: np.ndarray
    v_rows: np.ndarray
    x: np.ndarray


def build_basis(a, h, alpha: complex, beta: complex) -> BeamformerBasis:
    """Orthonormal basis ``{a_hat, h_hat, G}`` and data beam ``t1``.

    Parameters
    ----------
    a : (N,) complex array
        Target transmit steering vector.
    h : (N,) complex array
        User channel.
    alpha, beta : complex
        Data-beam weights, ``|alpha|^2 + |beta|^2 = 1``.

    Raises
    ------
    DegenerateChannel
        If ``h`` has no component orthogonal to ``a`` (to 1e-12 relative).
    """
    a = np.asarray(a, dtype=complex)
    h = np.asarray(h, dtype=complex)
    a_hat = a / np.linalg.norm(a)
    h_perp = h - np.vdot(a_hat, h) * a_hat
    perp_norm = np.linalg.norm(h_perp)
    if perp_norm < _COLLINEAR_RTOL * np.linalg.norm(h):
        raise DegenerateChannel("user channel is collinear with the steering vector")
    h_hat = h_perp / perp_norm

    # Last N-2 left singular vectors of [a_hat h_hat] span the null space of its adjoint.
    u, _, _ = np.linalg.svd(np.column_stack([a_hat, h_hat]), full_matrices=True)
    null_basis = u[:, 2:]
    t1 = alpha * a_hat + beta * h_hat
    return BeamformerBasis(a_hat=a_hat, h_hat=h_hat, null_basis=null_basis, t1=t1)


def basis_for(params: SystemParams, h, theta: float) -> BeamformerBasis:
    """:func:`build_basis` with ``a = a(theta)`` and the scenario's ``alpha``, ``beta``."""
    return build_basis(steering_vector(theta, params.n_tx), h, params.alpha, params.beta)


def transmit_covariance(basis: BeamformerBasis, params: SystemParams) -> np.ndarray:
    """``P tau t1 t1^H + P(1-tau)/(N-2) G G^H``."""
    t1 = basis.t1
    g = basis.null_basis
    return params.gamma1 * np.outer(t1, t1.conj()) + params.gamma2 * (g @ g.conj().T)


def build_waveform(basis: BeamformerBasis, params: SystemParams, rng: np.random.Generator) -> WaveformBlock:
    """Transmit block ``X = sqrt(P tau) t1 s_u + sqrt(P(1-tau)) G V``.

    The data row and the N-2 AN rows are drawn Gaussian and then
    orthogonalised jointly over the length-L row space, so ``s_u v_i^H = 0``
    and the row powers hold exactly. Consequently ``X X^H / L`` equals
    :func:`transmit_covariance` to round-off.
    """
    n = params.n_tx
    length = params.frame_len
    rows = n - 1
    z = (rng.standard_normal((length, rows)) + 1j * rng.standard_normal((length, rows))) / math.sqrt(2.0)
    q, _ = np.linalg.qr(z)
    ortho_rows = q.T  # orthonormal rows, (N-1) x L
    s_u = math.sqrt(length) * ortho_rows[0]
    v_rows = math.sqrt(length / (n - 2)) * ortho_rows[1:]
    x = (
        math.sqrt(params.gamma1) * np.outer(basis.t1, s_u)
        + math.sqrt(params.power * (1.0 - params.tau)) * (basis.null_basis @ v_rows)
    )
    return WaveformBlock(s_u=s_u, v_rows=v_rows, x=x)


def _projection_coords(a, h):
    """Batched coordinates of ``h`` on ``a_hat`` and the norm of its orthogonal part."""
    n = a.shape[-1]
    a_hat = a / math.sqrt(n)
    u = np.sum(a_hat.conj() * h, axis=-1)
    perp_sq = np.sum(np.abs(h) ** 2, axis=-1) - np.abs(u) ** 2
    return a_hat, u, np.sqrt(np.maximum(perp_sq, 0.0))


def user_beam_gain(h, theta, alpha: complex, beta: complex) -> np.ndarray:
    """Batched ``|h^H t1|^2`` without forming the basis explicitly.

    Uses ``h = u a_hat + h_perp`` with ``u = a_hat^H h``, giving
    ``|alpha|^2 |u|^2 + |beta|^2 ||h_perp||^2 + 2 ||h_perp|| Re(conj(alpha) beta u)``.
    """
    h = np.asarray(h, dtype=complex)
    a = steering_vector(theta, h.shape[-1])
    _, u, perp = _projection_coords(a, h)
    return (
        abs(alpha) ** 2 * np.abs(u) ** 2
        + abs(beta) ** 2 * perp**2
        + 2.0 * perp * np.real(np.conj(alpha) * beta * u)
    )


def eavesdropper_projections(h_e, h, theta, alpha: complex, beta: complex):
    """Batched ``|h_e^H t1|^2`` and ``sum_{i>=3} |h_e^H t_i|^2``.

    The second quantity is ``||h_e||^2 - |a_hat^H h_e|^2 - |h_hat^H h_e|^2``
    since ``[a_hat, h_hat, G]`` is unitary.
    """
    h = np.asarray(h, dtype=complex)
    h_e = np.asarray(h_e, dtype=complex)
    a = steering_vector(theta, h.shape[-1])
    a_hat, u, perp = _projection_coords(a, h)
    h_hat = (h - u[..., None] * a_hat) / perp[..., None]
    pa = np.sum(h_e.conj() * a_hat, axis=-1)  # h_e^H a_hat
    ph = np.sum(h_e.conj() * h_hat, axis=-1)  # h_e^H h_hat
    signal = np.abs(alpha * pa + beta * ph) ** 2
    leak = np.sum(np.abs(h_e) ** 2, axis=-1) - np.abs(pa) ** 2 - np.abs(ph) ** 2
    return signal, np.maximum(leak, 0.0)
