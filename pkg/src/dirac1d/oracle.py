"""Real-space shooting solver for bound states of the electric-potential Hamiltonian.

The eigenvalue equation is rewritten as u'(z) = i gamma5 (E - V(z) - m gamma0) u(z).
With V piecewise constant each segment is propagated by an exact 2x2 matrix
exponential; an adaptive Runge-Kutta path is kept as an independent check.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .algebra import SpinorSample
from .errors import UnsupportedRegimeError
from .potentials import PotentialConfig, ThetaField, theta_from_V


def _generator(E: float, V: float, m: float) -> np.ndarray:
    return np.array([[0.0, 1j * (E - V + m)], [1j * (E - V - m), 0.0]])


def segment_propagator(E: float, V: float, m: float, h: float) -> np.ndarray:
    """exp(A h) using A^2 = kappa^2 I with kappa^2 = m^2 - (E - V)^2."""
    A = _generator(E, V, m)
    kh = np.sqrt(complex(m * m - (E - V) ** 2)) * h
    if abs(kh) < 1e-4:
        x = kh * kh
        c = 1 + x / 2 + x * x / 24
        sk = h * (1 + x / 6 + x * x / 120)
    else:
        c = np.cosh(kh)
        sk = np.sinh(kh) / kh * h
    return c * np.eye(2) + sk * A


def _breakpoints(field: ThetaField, z0: float, z1: float) -> np.ndarray:
    lo, hi = min(z0, z1), max(z0, z1)
    inner = field.edges[(field.edges > lo) & (field.edges < hi)]
    pts = np.concatenate([[lo], inner, [hi]])
    return pts if z1 >= z0 else pts[::-1]


def _propagate_expm(field, m, E, z0, z1, u) -> np.ndarray:
    pts = _breakpoints(field, z0, z1)
    for a, b in zip(pts[:-1], pts[1:]):
        V = float(field.V(0.5 * (a + b)))
        u = segment_propagator(E, V, m, b - a) @ u
    return u


def _propagate_adaptive(field, m, E, z0, z1, u, rtol=1e-12, atol=1e-14) -> np.ndarray:
    pts = _breakpoints(field, z0, z1)
    y = np.concatenate([u.real, u.imag])
    for a, b in zip(pts[:-1], pts[1:]):
        G = _generator(E, float(field.V(0.5 * (a + b))), m)
        Gr = np.block([[G.real, -G.imag], [G.imag, G.real]])
        sol = solve_ivp(lambda _z, v: Gr @ v, (a, b), y, method="DOP853", rtol=rtol, atol=atol)
        if not sol.success:
            raise RuntimeError(f"adaptive integration failed on [{a}, {b}]: {sol.message}")
        y = sol.y[:, -1]
    return y[:2] + 1j * y[2:]


def integrate_dirac_ode(
    cfg: PotentialConfig,
    E: float,
    z_start: float,
    z_end: float,
    u_start: SpinorSample,
    method: str = "expm",
    field: ThetaField | None = None,
) -> SpinorSample:
    u = u_start.as_array()
    if not np.any(u):
        raise ValueError("u_start must be nonzero")
    field = field or theta_from_V(cfg)
    if method == "expm":
        out = _propagate_expm(field, cfg.m, E, z_start, z_end, u)
    elif method == "adaptive":
        out = _propagate_adaptive(field, cfg.m, E, z_start, z_end, u)
    else:
        raise ValueError(f"unknown method {method!r}")
    return SpinorSample.from_array(out)


@dataclass
class ShootingResult:
    energies: np.ndarray
    match_residuals: np.ndarray
    parity: list[str] = dc_field(default_factory=list)
    gap: tuple[float, float] = (0.0, 0.0)


class _Shooter:
    def __init__(self, cfg: PotentialConfig, field: ThetaField):
        self.cfg, self.field = cfg, field
        self.vl = float(field.V(-cfg.L / 2))
        self.vr = float(field.V(cfg.L / 2))

    def _start(self, E: float, V: float, sign: float) -> np.ndarray:
        m = self.cfg.m
        kappa = np.sqrt(m * m - (E - V) ** 2)
        return np.array([1.0, sign * 1j * kappa / (E - V + m)])

    def halves(self, E: float):
        L, m = self.cfg.L, self.cfg.m
        uL = _propagate_expm(self.field, m, E, -L / 2, 0.0, self._start(E, self.vl, -1.0))
        uR = _propagate_expm(self.field, m, E, L / 2, 0.0, self._start(E, self.vr, +1.0))
        return uL, uR

    def match(self, E: float) -> float:
        uL, uR = self.halves(E)
        det = uL[0] * uR[1] - uL[1] * uR[0]
        # both halves are (real, i*real) so det is purely imaginary
        return float((det / 1j).real / (np.linalg.norm(uL) * np.linalg.norm(uR)))

    def even(self, E: float) -> float:
        _, uR = self.halves(E)
        return float(uR[1].imag / np.linalg.norm(uR))

    def odd(self, E: float) -> float:
        _, uR = self.halves(E)
        return float(uR[0].real / np.linalg.norm(uR))


def _roots(fn, grid: np.ndarray, xtol: float = 1e-13) -> list[float]:
    vals = np.array([fn(E) for E in grid])
    out = []
    for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0):
        out.append(brentq(fn, grid[i], grid[i + 1], xtol=xtol, rtol=4 * np.finfo(float).eps))
    out += [float(E) for E in grid[vals == 0.0]]
    return sorted(out)


def _gap_grid(cfg: PotentialConfig, sh: _Shooter, n_scan: int) -> np.ndarray:
    if abs(sh.vl - sh.vr) > 1e-14:
        raise UnsupportedRegimeError("outer potential must take the same value at both box ends")
    lo, hi = sh.vl - cfg.m, sh.vl + cfg.m
    return np.linspace(lo, hi, n_scan + 2)[1:-1]


def bound_states_shooting(
    cfg: PotentialConfig,
    n_scan: int = 2000,
    field: ThetaField | None = None,
    use_parity: bool = False,
) -> ShootingResult:
    """In-gap roots of the matching determinant at z = 0.

    With ``use_parity`` the even and odd matching conditions are scanned
    separately (valid only for an even potential) and the labels recorded.
    """
    if cfg.eta >= cfg.m:
        raise UnsupportedRegimeError(f"need eta < m for the shooting oracle (eta={cfg.eta}, m={cfg.m})")
    field = field or theta_from_V(cfg)
    sh = _Shooter(cfg, field)
    grid = _gap_grid(cfg, sh, n_scan)
    gap = (float(grid[0]), float(grid[-1]))
    if use_parity:
        if not field.is_even:
            raise UnsupportedRegimeError("parity split requires an even potential")
        tagged = [(E, "even") for E in _roots(sh.even, grid)] + [(E, "odd") for E in _roots(sh.odd, grid)]
        tagged.sort()
        E = np.array([t[0] for t in tagged])
        labels = [t[1] for t in tagged]
    else:
        E = np.array(_roots(sh.match, grid))
        labels = []
    res = np.array([abs(sh.match(e)) for e in E])
    return ShootingResult(E, res, labels, gap)
