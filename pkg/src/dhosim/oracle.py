"""Brute-force Schrodinger integration of the driven oscillator.

Independent of the closed forms: the state is propagated on a truncated Fock
basis with a second-order (Strang) split of ``H0 = a^dag a`` and the drive
``F(t) (a + a^dag)``. The drive term is diagonal in the eigenbasis of the
truncated position operator ``X = a + a^dag``, so each step is one dense
matrix product plus a diagonal phase. Several drives (columns) are
propagated together.

Units: ``omega0 = 1``, so times are ``tau = omega0 t`` and the drive is
``F(tau) = kappa cos(x tau + phi)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

DEFAULT_DIM = 200
DEFAULT_STEP = 1e-4


@dataclass
class OracleResult:
    taus: np.ndarray           # (n_t,)
    mean_number: np.ndarray    # (n_t, n_drives)
    mean_a: np.ndarray         # (n_t, n_drives), lab-frame <a>
    top_population: np.ndarray  # (n_t, n_drives), weight on the last Fock level


def propagate(taus: Sequence[float], drives: Sequence[tuple[float, float]], kappa: float, *,
              dim: int = DEFAULT_DIM, step: float = DEFAULT_STEP) -> OracleResult:
    """Evolve ``|0>`` under each drive ``(x, phi)`` and sample at ``taus``.

    ``taus`` must be ascending integer multiples of ``step``.
    """
    taus = np.asarray(taus, dtype=float)
    if np.any(np.diff(taus) <= 0) or taus[0] <= 0:
        raise ValueError("taus must be positive and strictly ascending")
    n_at = np.rint(taus / step).astype(int)
    if np.any(np.abs(n_at * step - taus) > 1e-9 * np.maximum(taus, 1.0)):
        raise ValueError("every sample time must be an integer multiple of the step")
    xs = np.array([d[0] for d in drives], dtype=float)
    phis = np.array([d[1] for d in drives], dtype=float)

    levels = np.arange(dim)
    off = np.sqrt(levels[1:].astype(float))
    pos, vecs = eigh_tridiagonal(np.zeros(dim), off)   # X = vecs @ diag(pos) @ vecs.T

    def free(h):
        return (vecs.T * np.exp(-1j * levels * h)) @ vecs

    m_half = free(0.5 * step)
    m_full = free(step)

    psi0 = np.zeros((dim, len(drives)), dtype=complex)
    psi0[0] = 1.0
    chi = m_half @ (vecs.T @ psi0)
    a_op = np.diag(off, 1)

    out_n, out_a, out_top = [], [], []
    targets = iter(zip(n_at, taus))
    target_n, target_tau = next(targets)
    k = 0
    while True:
        k += 1
        t_mid = (k - 0.5) * step
        force = kappa * np.cos(xs * t_mid + phis)
        kicked = np.exp(-1j * step * pos[:, None] * force[None, :]) * chi
        if k == target_n:
            psi = vecs @ (m_half @ kicked)
            prob = np.abs(psi) ** 2
            out_n.append(levels @ prob)
            out_a.append(np.einsum("ij,ij->j", psi.conj(), a_op @ psi))
            out_top.append(prob[-1])
            try:
                target_n, target_tau = next(targets)
            except StopIteration:
                break
        chi = m_full @ kicked
    return OracleResult(taus=taus, mean_number=np.array(out_n), mean_a=np.array(out_a),
                        top_population=np.array(out_top))


def interaction_amplitude(result: OracleResult) -> np.ndarray:
    """Convert lab-frame ``<a>`` to the rotating-frame amplitude ``beta``."""
    return np.exp(1j * result.taus)[:, None] * result.mean_a
