"""Truncated Fourier x spinor discretisation of the Dirac Hamiltonians.

Basis vectors are exp(i k_n z)/sqrt(L) for n = -N..N, in two spinor blocks:
index alpha * (2N+1) + (n + N) with alpha = 0 (upper) or 1 (lower).
Multiplication by a function f(z) becomes the Toeplitz matrix
T[f]_{nn'} = f_hat(k_n - k_n') with f_hat(q) = (1/L) int f exp(-iqz) dz.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.sparse as sp

from .algebra import SpinorSample
from .errors import DomainError, GapClosedError
from .potentials import PotentialConfig, RampSpec, ThetaField, ramp_lambda, theta_from_V

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class FourierBasis:
    L: float
    N: int

    @property
    def n(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    @property
    def k(self) -> np.ndarray:
        return 2 * np.pi * self.n / self.L

    @property
    def D(self) -> int:
        return 2 * self.N + 1

    @property
    def dim(self) -> int:
        return 2 * self.D

    @property
    def k_max(self) -> float:
        return 2 * np.pi * self.N / self.L

    @property
    def q(self) -> np.ndarray:
        """Difference wavenumbers k_n - k_n' for Toeplitz assembly."""
        return 2 * np.pi * np.arange(-2 * self.N, 2 * self.N + 1) / self.L

    def toeplitz(self, coeffs: np.ndarray) -> np.ndarray:
        n = self.n
        return coeffs[(n[:, None] - n[None, :]) + 2 * self.N]

    def plane_waves(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=float))
        return np.exp(1j * np.outer(z, self.k)) / np.sqrt(self.L)

    def kinetic(self) -> np.ndarray:
        """-i gamma5 d/dz + m gamma0 without the mass: k sigma1."""
        D = self.D
        H = np.zeros((self.dim, self.dim))
        H[:D, D:] = np.diag(self.k)
        H[D:, :D] = np.diag(self.k)
        return H


def basis_for(cfg: PotentialConfig) -> FourierBasis:
    return FourierBasis(cfg.L, cfg.N)


@dataclass(frozen=True)
class HamiltonianMatrix:
    matrix: np.ndarray
    label: str
    basis: FourierBasis
    mass: float

    @property
    def hermiticity_residual(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))


def _maybe_real(H: np.ndarray) -> np.ndarray:
    scale = max(1.0, float(np.max(np.abs(H))))
    if np.max(np.abs(H.imag)) <= 1e-14 * scale:
        return np.ascontiguousarray(H.real)
    return H


class HamiltonianFactory:
    """Caches the static Toeplitz pieces so that H(t) is cheap to rebuild."""

    def __init__(self, cfg: PotentialConfig, field: ThetaField | None = None):
        self.cfg = cfg
        self.field = field or theta_from_V(cfg)
        self.basis = basis_for(cfg)
        b = self.basis
        q = b.q
        self._kin = b.kinetic().astype(complex)
        self._TV = b.toeplitz(self.field.fourier_V(q))
        self._TT2 = b.toeplitz(self.field.fourier_Theta2(q))

    def stepper_matrix(self, lam: float, scalar_weight: float, theta2_weight: float,
                       out: np.ndarray | None = None) -> np.ndarray:
        """Same matrix as ``build`` without checks; real-valued when the profile is even.

        ``out`` may be a reusable (dim, dim) float buffer.
        """
        if not self.field.is_even:
            return self.build(lam, scalar_weight, theta2_weight)
        if not hasattr(self, "_real"):
            b = self.basis
            self._real = (
                np.diag(b.k),
                np.ascontiguousarray(self._TV.real),
                np.ascontiguousarray(self._TT2.real),
                (b.n[:, None] - b.n[None, :]) + 2 * b.N,
            )
        K, TV, TT2, idx = self._real
        D, m, q = self.basis.D, self.cfg.m, self.basis.q
        # odd theta: coefficients of exp(+-i lam theta) are real
        ep = self.field.fourier_exp_itheta(q, lam).real
        em = self.field.fourier_exp_itheta(q, -lam).real
        C = ((0.5 * m) * (ep + em))[idx]
        S = ((0.5 * m) * (ep - em))[idx]  # i m T[sin(lam theta)]
        W = scalar_weight * TV
        if theta2_weight != 0.0:
            W += theta2_weight * TT2
        H = np.empty((2 * D, 2 * D)) if out is None else out
        np.add(W, C, out=H[:D, :D])
        np.subtract(W, C, out=H[D:, D:])
        np.add(K, S, out=H[:D, D:])
        np.subtract(K, S, out=H[D:, :D])
        return H

    def _mass_blocks(self, lam: float):
        b, m = self.basis, self.cfg.m
        if lam == 0.0 or not np.any(self.field.values):
            return m * np.eye(b.D, dtype=complex), np.zeros((b.D, b.D), dtype=complex)
        ep = self.field.fourier_exp_itheta(b.q, lam)
        em = self.field.fourier_exp_itheta(b.q, -lam)
        return m * b.toeplitz(0.5 * (ep + em)), m * b.toeplitz((ep - em) / 2j)

    def build(self, lam: float, scalar_weight: float, theta2_weight: float) -> np.ndarray:
        """Matrix of k sigma1 + m[T(cos lam th) sigma3 - T(sin lam th) sigma2] + scalar."""
        D = self.basis.D
        H = self._kin.copy()
        C, S = self._mass_blocks(lam)
        W = scalar_weight * self._TV
        if theta2_weight != 0.0:
            W = W + theta2_weight * self._TT2
        H[:D, :D] += C + W
        H[D:, D:] += -C + W
        H[:D, D:] += 1j * S
        H[D:, :D] -= 1j * S
        return H

    def A(self) -> HamiltonianMatrix:
        return self._wrap(self.build(0.0, 1.0, 0.0), "A")

    def B(self) -> HamiltonianMatrix:
        return self._wrap(self.build(1.0, 0.0, 0.0), "B")

    def general(self, ramp: RampSpec, t: float) -> HamiltonianMatrix:
        lam, _, d2 = ramp_lambda(ramp, t)
        # V + U = (1 - lam) V - (lam''/2) Theta2
        H = self.build(lam, 1.0 - lam, -0.5 * d2)
        return self._wrap(H, f"general(t={t:g})")

    def _wrap(self, H: np.ndarray, label: str) -> HamiltonianMatrix:
        res = float(np.max(np.abs(H - H.conj().T)))
        if res > HERMITIAN_TOL:
            raise RuntimeError(f"assembled {label} is not Hermitian (residual {res:.2e})")
        return HamiltonianMatrix(_maybe_real(H), label, self.basis, self.cfg.m)


def assemble_A(cfg: PotentialConfig, field: ThetaField | None = None) -> HamiltonianMatrix:
    return HamiltonianFactory(cfg, field).A()


def assemble_B(cfg: PotentialConfig, field: ThetaField | None = None) -> HamiltonianMatrix:
    return HamiltonianFactory(cfg, field).B()


def assemble_general(
    cfg: PotentialConfig, ramp: RampSpec, t: float, field: ThetaField | None = None
) -> HamiltonianMatrix:
    return HamiltonianFactory(cfg, field).general(ramp, t)


def rotation_matrix(basis: FourierBasis, field: ThetaField, scale: float = 1.0) -> np.ndarray:
    """Galerkin matrix of exp(-i gamma5 scale theta(z) / 2)."""
    D = basis.D
    ep = field.fourier_exp_itheta(basis.q, 0.5 * scale)
    em = field.fourier_exp_itheta(basis.q, -0.5 * scale)
    Tc = basis.toeplitz(0.5 * (ep + em))
    Ts = basis.toeplitz((ep - em) / 2j)
    R = np.empty((2 * D, 2 * D), dtype=complex)
    R[:D, :D] = Tc
    R[D:, D:] = Tc
    R[:D, D:] = -1j * Ts
    R[D:, :D] = -1j * Ts
    return _maybe_real(R)


# ---------------------------------------------------------------------------
# mode sets


def _cmatmul(F: np.ndarray, C) -> np.ndarray:
    """F @ C with F complex; avoids promoting a real C to complex."""
    if sp.issparse(C):
        return np.asarray((C.T @ F.T).T)
    if np.isrealobj(C):
        return F.real @ C + 1j * (F.imag @ C)
    return F @ C


def _is_uniform_period(z: np.ndarray, L: float) -> bool:
    M = len(z)
    if M < 16:
        return False
    return bool(np.allclose(np.diff(z), L / M, rtol=0, atol=1e-12 * L))


def _fft_eval(basis: FourierBasis, C: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Exact evaluation on z_j = z_0 + j L/M: fold wavenumbers mod M, then one FFT."""
    M = len(z)
    phased = C * (np.exp(1j * basis.k * z[0]) / np.sqrt(basis.L))[:, None]
    folded = np.zeros((M, C.shape[1]), dtype=complex)
    np.add.at(folded, basis.n % M, phased)
    return np.fft.ifft(folded, axis=0) * M


@dataclass
class ModeSet:
    """Eigenpairs sorted by energy; columns of ``coeffs`` are basis vectors.

    When ``rotation`` is set, the modes are the pointwise products
    exp(-i gamma5 scale theta(z)/2) u(z) of the base modes ``coeffs``; the
    projection onto the truncated basis is kept in ``projected``.
    """

    energies: np.ndarray
    coeffs: np.ndarray
    basis: FourierBasis
    label: str = ""
    rotation: ThetaField | None = None
    rotation_scale: float = 1.0
    projected: np.ndarray | None = None
    warnings: list[str] = dc_field(default_factory=list)

    def __len__(self) -> int:
        return len(self.energies)

    @property
    def signs(self) -> np.ndarray:
        return np.where(self.energies > 0, 1, -1)

    @property
    def complete(self) -> bool:
        return len(self) == self.basis.dim

    @property
    def projection_loss(self) -> np.ndarray:
        if self.projected is None:
            return np.zeros(len(self))
        return 1.0 - np.sum(np.abs(self.projected) ** 2, axis=0)

    def select(self, mask) -> "ModeSet":
        idx = np.flatnonzero(mask)
        C = self.coeffs[:, idx]
        P = None if self.projected is None else self.projected[:, idx]
        return ModeSet(self.energies[idx], C, self.basis, self.label, self.rotation,
                       self.rotation_scale, P, list(self.warnings))

    def evaluate(self, z, cols=None) -> tuple[np.ndarray, np.ndarray]:
        """Upper and lower components, shape (len(z), n_modes); any real z (periodic)."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        C = self.coeffs if cols is None else self.coeffs[:, cols]
        D = self.basis.D
        if not sp.issparse(C) and _is_uniform_period(z, self.basis.L):
            u1 = _fft_eval(self.basis, C[:D], z)
            u2 = _fft_eval(self.basis, C[D:], z)
        else:
            F = self.basis.plane_waves(z)
            u1 = _cmatmul(F, C[:D])
            u2 = _cmatmul(F, C[D:])
        if self.rotation is not None:
            half = 0.5 * self.rotation_scale * self.rotation.theta(self.rotation.wrap(z))
            c = np.cos(half)[:, None]
            s = np.sin(half)[:, None]
            u1, u2 = c * u1 - 1j * s * u2, c * u2 - 1j * s * u1
        return u1, u2


def _fix_phases(C: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(C), axis=0)
    piv = C[idx, np.arange(C.shape[1])]
    if np.isrealobj(C):
        return C * np.where(piv < 0, -1.0, 1.0)
    return C * (np.abs(piv) / piv)


def diagonalize(H: HamiltonianMatrix) -> ModeSet:
    A = H.matrix
    try:
        E, C = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigensolver did not converge for {H.label}") from exc
    gap = float(np.min(np.abs(E)))
    if gap < 1e-8 * H.mass:
        raise GapClosedError(f"{H.label}: level at |E| = {gap:.3e} < 1e-8 m; vacuum ill-defined")
    return ModeSet(E, _fix_phases(C), H.basis, H.label)


def eigenvalues(H: HamiltonianMatrix) -> np.ndarray:
    return np.linalg.eigvalsh(H.matrix)


def gram_residual(modes: ModeSet) -> float:
    """Orthonormality defect. For rotated sets the pointwise map is unitary, so
    the L2 Gram matrix equals that of the base coefficients exactly."""
    C = modes.coeffs
    G = C.conj().T @ C
    if sp.issparse(G):
        G = G.toarray()
    return float(np.max(np.abs(G - np.eye(G.shape[0]))))


def evaluate_mode(modes: ModeSet, index: int, z):
    """Value of mode ``index`` at z in the box; SpinorSample for scalar z, list otherwise."""
    za = np.asarray(z, dtype=float)
    L = modes.basis.L
    if np.any(np.abs(za) > L / 2 * (1 + 1e-12)):
        raise DomainError(f"z outside the box [-{L / 2}, {L / 2}]")
    u1, u2 = modes.evaluate(za, cols=[index])
    samples = [SpinorSample(complex(a), complex(b)) for a, b in zip(u1[:, 0], u2[:, 0])]
    return samples[0] if za.ndim == 0 else samples


def chiral_map_modes(modesA: ModeSet, field: ThetaField, scale: float = 1.0) -> ModeSet:
    """B-modes exp(-i gamma5 theta/2) u_A; energies copied, evaluation is pointwise exact."""
    R = rotation_matrix(modesA.basis, field, scale)
    C = modesA.coeffs
    P = R @ C if not sp.issparse(C) else np.asarray(R @ C.toarray())
    out = ModeSet(modesA.energies.copy(), C, modesA.basis, "B(mapped)", field, scale, P)
    loss = out.projection_loss
    bad = int(np.sum(loss > 1e-6))
    if bad:
        out.warnings.append(
            f"projection loss above 1e-6 for {bad} of {len(loss)} modes (max {loss.max():.2e})"
        )
    return out


def free_spinor(p, m: float, j: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Energies and spinor components N(1, p/(E+m)), N^2 = (E+m)/2E, for sign j."""
    p = np.asarray(p, dtype=float)
    E = j * np.sqrt(p**2 + m**2)
    norm2 = (E + m) / (2 * E)
    if j > 0:
        up = np.sqrt(norm2)
        lo = up * p / (E + m)
    else:
        # E + m -> 0 at p = 0: write N p/(E+m) as -p / sqrt(2|E|(|E|-m)), and take (0, 1) at p = 0
        up = np.sqrt(norm2)
        denom = np.sqrt(2 * np.abs(E) * (np.abs(E) - m))
        with np.errstate(invalid="ignore", divide="ignore"):
            lo = np.where(p == 0, 1.0, -p / np.where(denom == 0, 1.0, denom))
    return E, up, lo


def free_modes(basis: FourierBasis, m: float) -> ModeSet:
    """Analytic plane-wave eigenmodes of the free Hamiltonian (sparse coefficients)."""
    D = basis.D
    rows, cols, vals, energies, keys = [], [], [], [], []
    col = 0
    for j in (-1, 1):
        E, up, lo = free_spinor(basis.k, m, j)
        for i in range(D):
            rows += [i, D + i]
            cols += [col, col]
            vals += [up[i], lo[i]]
            energies.append(E[i])
            keys.append(basis.n[i])
            col += 1
    order = np.lexsort((np.array(keys), np.array(energies)))
    inv = np.empty_like(order)
    inv[order] = np.arange(len(order))
    C = sp.csc_matrix((vals, (rows, inv[np.array(cols)])), shape=(2 * D, 2 * D))
    return ModeSet(np.array(energies)[order], C, basis, "free")


def level_differences(EA: np.ndarray, EB: np.ndarray, window: float | None = None) -> np.ndarray:
    """Pairwise differences of sorted spectra, optionally restricted to |E_A| <= window."""
    EA, EB = np.sort(EA), np.sort(EB)
    if len(EA) != len(EB):
        raise ValueError("spectra of different length")
    if np.sum(EA < 0) != np.sum(EB < 0):
        raise ValueError("spectra have different numbers of negative levels")
    d = np.abs(EA - EB)
    return d if window is None else d[np.abs(EA) <= window]


def conjugation_defect(cfg: PotentialConfig, k_window: float = 5.0) -> float:
    """max |H_B - R H_A R^T| over basis states with |k| <= k_window."""
    fac = HamiltonianFactory(cfg)
    R = rotation_matrix(fac.basis, fac.field)
    HA, HB = fac.A().matrix, fac.B().matrix
    diff = HB - R @ HA @ R.conj().T
    keep = np.abs(np.concatenate([fac.basis.k, fac.basis.k])) <= k_window
    return float(np.max(np.abs(diff[np.ix_(keep, keep)])))


def residual_norms(H: HamiltonianMatrix, modes: ModeSet, cols, k_fraction: float = 0.5) -> np.ndarray:
    """||H u - E u|| of projected mapped modes over rows with |k| <= k_fraction * k_max.

    The outermost rows carry a truncation defect of the pointwise product that
    does not shrink with N, so they are left out.
    """
    C = modes.projected if modes.projected is not None else modes.coeffs
    C = C[:, cols]
    C = C / np.linalg.norm(C, axis=0)
    R = H.matrix @ C - C * modes.energies[cols]
    k = np.abs(np.concatenate([H.basis.k, H.basis.k]))
    return np.linalg.norm(R[k <= k_fraction * H.basis.k_max], axis=0)
