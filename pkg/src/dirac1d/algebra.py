"""Two-dimensional gamma matrices and chiral rotations.

Fixed representation: gamma0 = sigma3, gamma5 = sigma1, gamma1 = gamma0 gamma5.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GammaRep:
    gamma0: np.ndarray
    gamma1: np.ndarray
    gamma5: np.ndarray

    def residuals(self) -> dict[str, float]:
        """Max-entry residuals of the defining identities."""
        g0, g1, g5 = self.gamma0, self.gamma1, self.gamma5
        r = {
            "anticommute_01": g0 @ g1 + g1 @ g0,
            "gamma0_sq": g0 @ g0 - IDENTITY,
            "gamma1_sq": g1 @ g1 + IDENTITY,
            "gamma0_herm": g0 - g0.conj().T,
            "gamma1_antiherm": g1 + g1.conj().T,
            "gamma5_product": g5 - g0 @ g1,
            "gamma5_herm": g5 - g5.conj().T,
            "gamma5_sq": g5 @ g5 - IDENTITY,
            "anticommute_05": g5 @ g0 + g0 @ g5,
        }
        return {k: float(np.max(np.abs(v))) for k, v in r.items()}


@dataclass(frozen=True)
class SpinorSample:
    upper: complex
    lower: complex

    def __post_init__(self):
        if not (np.isfinite(self.upper) and np.isfinite(self.lower)):
            raise ValueError("spinor components must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.upper, self.lower], dtype=complex)

    @classmethod
    def from_array(cls, v) -> "SpinorSample":
        v = np.asarray(v, dtype=complex).reshape(2)
        return cls(complex(v[0]), complex(v[1]))


_STANDARD = GammaRep(_frozen(SIGMA3), _frozen(SIGMA3 @ SIGMA1), _frozen(SIGMA1))


def standard_rep() -> GammaRep:
    return _STANDARD


def chiral_rotation(theta: float, rep: GammaRep | None = None) -> np.ndarray:
    """exp(-i gamma5 theta / 2) as a 2x2 unitary matrix."""
    theta = float(theta)
    if not np.isfinite(theta):
        raise ValueError("theta must be finite")
    g5 = (rep or _STANDARD).gamma5
    return np.cos(theta / 2) * IDENTITY - 1j * np.sin(theta / 2) * g5


def chiral_rotation_field(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised rotation in the standard basis: returns (diagonal, off-diagonal) entries."""
    theta = np.asarray(theta, dtype=float)
    return np.cos(theta / 2).astype(complex), -1j * np.sin(theta / 2)


def mass_phase(theta: float, rep: GammaRep | None = None) -> np.ndarray:
    """exp(i gamma5 theta) = cos(theta) I + i sin(theta) gamma5."""
    g5 = (rep or _STANDARD).gamma5
    return np.cos(theta) * IDENTITY + 1j * np.sin(theta) * g5
