"""Truncated density matrices in the Fock basis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITIAN_TOL = 1e-12
DIAGONAL_TOL = 1e-12


class StateError(ValueError):
    """Density matrix violates one of its invariants."""


@dataclass
class FockDensityMatrix:
    """Density matrix on Fock levels ``0 .. dim-1``.

    ``tail_bound`` is the population allowed to sit above the cutoff, so the
    trace is only required to lie in ``[1 - tail_bound, 1]``.
    """

    elements: np.ndarray
    tail_bound: float = 0.0

    def __post_init__(self):
        self.elements = np.asarray(self.elements, dtype=complex)
        if self.elements.ndim != 2 or self.elements.shape[0] != self.elements.shape[1]:
            raise StateError(f"expected a square matrix, got shape {self.elements.shape}")
        if self.dim < 2:
            raise StateError("Fock cutoff must be at least 2")

    @property
    def dim(self) -> int:
        return self.elements.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.elements).real)

    @property
    def purity(self) -> float:
        rho = self.elements
        return float(np.einsum("ij,ji->", rho, rho).real)

    @property
    def populations(self) -> np.ndarray:
        return self.elements.diagonal().real.copy()

    def mean_number(self) -> float:
        return float(np.arange(self.dim) @ self.populations)

    def eigenvalues(self) -> np.ndarray:
        rho = self.elements
        return np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))

    def check(self) -> None:
        """Raise :class:`StateError` if any invariant fails."""
        rho = self.elements
        herm = float(np.max(np.abs(rho - rho.conj().T)))
        if herm > HERMITIAN_TOL:
            raise StateError(f"not Hermitian: max |rho - rho^dag| = {herm:.3e}")
        tr = self.trace
        if not (1 - self.tail_bound - 1e-12 <= tr <= 1 + 1e-12):
            raise StateError(f"trace {tr!r} outside [1 - {self.tail_bound:.3e}, 1]")
        if np.min(self.populations) < -DIAGONAL_TOL:
            raise StateError("negative population on the diagonal")
        if self.purity > 1 + 1e-12:
            raise StateError(f"purity {self.purity!r} exceeds 1")
