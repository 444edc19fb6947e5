"""Square-well potential, the associated pseudoscalar angle, ramp and gauge fields.

Potentials are piecewise constant on the periodic box [-L/2, L/2]. The angle
theta(z) = -2 int_0^z V is then piecewise linear and its integral Theta2 is
piecewise quadratic, so every Fourier coefficient has a closed form.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import spherical_jn

from .errors import ConfigError, DomainError

_EDGE_TOL = 1e-12


@dataclass(frozen=True)
class PotentialConfig:
    m: float = 1.0
    eta: float = 0.5
    a: float = 4.0
    L: float = 40.0
    N: int = 256
    compensate: bool = True
    Lambda_damp: float | None = 5.0

    def __post_init__(self):
        if not np.isfinite(self.m) or self.m <= 0:
            raise ConfigError(f"m: must be positive, got {self.m}")
        if not (0 <= self.eta <= self.m):
            raise ConfigError(f"eta: need 0 <= eta <= m (m={self.m}), got {self.eta}")
        if not self.a > 0:
            raise ConfigError(f"a: must be positive, got {self.a}")
        if not self.L >= 4 * self.a:
            raise ConfigError(f"L: need L >= 4a = {4 * self.a}, got {self.L}")
        if int(self.N) != self.N or self.N < 16:
            raise ConfigError(f"N: need an integer >= 16, got {self.N}")
        object.__setattr__(self, "N", int(self.N))
        if self.Lambda_damp is not None and not self.Lambda_damp > 0:
            raise ConfigError(f"Lambda_damp: must be positive or unset, got {self.Lambda_damp}")

    @property
    def shift(self) -> float:
        """Constant added to V so that it integrates to zero over the box."""
        return self.eta * self.a / self.L if self.compensate else 0.0

    @property
    def k_max(self) -> float:
        return 2 * np.pi * self.N / self.L

    @property
    def dim(self) -> int:
        return 2 * (2 * self.N + 1)

    def replace(self, **kw) -> "PotentialConfig":
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(kw)
        return PotentialConfig(**d)


def _j0(x):
    return np.sinc(np.asarray(x) / np.pi)


@dataclass(frozen=True)
class ThetaField:
    """Piecewise-constant V with the derived theta(z) and Theta2(z) in closed form.

    ``edges`` always contains 0 so that theta(0) = Theta2(0) = 0 sits on a node.
    """

    edges: np.ndarray
    values: np.ndarray
    L: float

    @classmethod
    def from_profile(cls, edges, values, L: float, compensate: bool = False) -> "ThetaField":
        edges = np.asarray(edges, dtype=float)
        values = np.asarray(values, dtype=float)
        if edges.ndim != 1 or len(edges) != len(values) + 1:
            raise ConfigError("profile: need len(edges) == len(values) + 1")
        if abs(edges[0] + L / 2) > _EDGE_TOL or abs(edges[-1] - L / 2) > _EDGE_TOL:
            raise ConfigError("profile: edges must start at -L/2 and end at L/2")
        if np.any(np.diff(edges) <= 0):
            raise ConfigError("profile: edges must be strictly increasing")
        if compensate:
            values = values - np.dot(values, np.diff(edges)) / L
        if not np.any(np.abs(edges) < _EDGE_TOL):
            i = int(np.searchsorted(edges, 0.0))
            edges = np.insert(edges, i, 0.0)
            values = np.insert(values, i, values[i - 1])
        edges = np.where(np.abs(edges) < _EDGE_TOL, 0.0, edges)
        edges.setflags(write=False)
        values = values.copy()
        values.setflags(write=False)
        return cls(edges, values, float(L))

    # -- node data -------------------------------------------------------
    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def mids(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def slopes(self) -> np.ndarray:
        return -2.0 * self.values

    def _nodes_anchored(self):
        # theta and Theta2 at edges with theta(0) = Theta2(0) = 0
        h, s = self.widths, self.slopes
        th = np.concatenate([[0.0], np.cumsum(s * h)])
        i0 = int(np.flatnonzero(self.edges == 0.0)[0])
        th = th - th[i0]
        T2 = np.concatenate([[0.0], np.cumsum(th[:-1] * h + 0.5 * s * h**2)])
        return th, T2 - T2[i0]

    # -- pointwise evaluation --------------------------------------------
    def _check(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if np.any(np.abs(z) > self.L / 2 + _EDGE_TOL * max(1.0, self.L)):
            raise DomainError(f"z outside the box [-{self.L / 2}, {self.L / 2}]")
        return z

    def _segment(self, z: np.ndarray) -> np.ndarray:
        # at an edge, pick the segment farther from the origin
        right = np.searchsorted(self.edges, z, side="right") - 1
        left = np.searchsorted(self.edges, z, side="left") - 1
        i = np.where(z >= 0, right, left)
        return np.clip(i, 0, len(self.values) - 1)

    def V(self, z):
        z = self._check(z)
        return self.values[self._segment(z)]

    def theta(self, z):
        z = self._check(z)
        th, _ = self._nodes_anchored()
        i = self._segment(z)
        return th[i] + self.slopes[i] * (z - self.edges[i])

    def theta_prime(self, z):
        return -2.0 * self.V(z)

    def Theta2(self, z):
        z = self._check(z)
        th, T2 = self._nodes_anchored()
        i = self._segment(z)
        u = z - self.edges[i]
        return T2[i] + th[i] * u + 0.5 * self.slopes[i] * u**2

    def wrap(self, z):
        """Map arbitrary real positions into the box."""
        z = np.asarray(z, dtype=float)
        return (z + self.L / 2) % self.L - self.L / 2

    @property
    def seam_jump(self) -> float:
        th, _ = self._nodes_anchored()
        return float(th[-1] - th[0])

    @property
    def is_even(self) -> bool:
        return bool(
            np.allclose(self.edges, -self.edges[::-1], atol=1e-12)
            and np.allclose(self.values, self.values[::-1], atol=1e-14)
        )

    @property
    def mean_V(self) -> float:
        return float(np.dot(self.values, self.widths) / self.L)

    # -- Fourier coefficients (1/L) int f(z) exp(-iqz) dz ------------------
    def fourier_V(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)[..., None]
        h, zm = self.widths, self.mids
        terms = self.values * h * _j0(q * h / 2) * np.exp(-1j * q * zm)
        return terms.sum(axis=-1) / self.L

    def fourier_exp_itheta(self, q, scale: float = 1.0) -> np.ndarray:
        """Coefficients of exp(i * scale * theta(z))."""
        q = np.asarray(q, dtype=float)[..., None]
        th, _ = self._nodes_anchored()
        h, zm, s = self.widths, self.mids, self.slopes
        th_mid = th[:-1] + 0.5 * s * h
        kappa = scale * s - q
        terms = h * _j0(kappa * h / 2) * np.exp(1j * (scale * th_mid - q * zm))
        return terms.sum(axis=-1) / self.L

    def fourier_Theta2(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)[..., None]
        th, T2 = self._nodes_anchored()
        h, zm, s = self.widths, self.mids, self.slopes
        hh = h / 2
        p0 = T2[:-1] + th[:-1] * hh + 0.5 * s * hh**2
        p1 = th[:-1] + s * hh
        p2 = 0.5 * s
        x = q * h / 2
        j0, j1, j2 = (spherical_jn(n, x) for n in range(3))
        I0 = h * j0
        I1 = -0.5j * h**2 * j1
        I2 = h**3 / 12 * (j0 - 2 * j2)
        terms = np.exp(-1j * q * zm) * (p0 * I0 + p1 * I1 + p2 * I2)
        return terms.sum(axis=-1) / self.L


def fourier_quadrature(field: ThetaField, func, q, nodes: int = 64) -> np.ndarray:
    """Gauss-Legendre evaluation of (1/L) int func(z) exp(-iqz) dz, segment by segment.

    ``func`` receives positions strictly inside one segment, so kinks never
    fall on quadrature nodes.
    """
    q = np.asarray(q, dtype=float)
    x, w = np.polynomial.legendre.leggauss(nodes)
    out = np.zeros(q.shape, dtype=complex)
    for z0, z1 in zip(field.edges[:-1], field.edges[1:]):
        hh = 0.5 * (z1 - z0)
        zs = 0.5 * (z0 + z1) + hh * x
        fz = func(zs)
        out += hh * (np.exp(-1j * np.multiply.outer(q, zs)) @ (w * fz))
    return out / field.L


def square_well_V(cfg: PotentialConfig, z):
    """-eta inside |z| < a/2, 0 outside, minus the box mean when compensating."""
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(z) > cfg.L / 2 + _EDGE_TOL * max(1.0, cfg.L)):
        raise DomainError(f"z outside the box [-{cfg.L / 2}, {cfg.L / 2}]")
    v = np.where(np.abs(z) < cfg.a / 2, -cfg.eta, 0.0) + cfg.shift
    return v if v.ndim else float(v)


def theta_from_V(cfg: PotentialConfig) -> ThetaField:
    L, a = cfg.L, cfg.a
    edges = [-L / 2, -a / 2, a / 2, L / 2]
    values = np.array([0.0, -cfg.eta, 0.0]) + cfg.shift
    return ThetaField.from_profile(edges, values, L)


@dataclass(frozen=True)
class RampSpec:
    t_f: float = 20.0

    def __post_init__(self):
        if not self.t_f > 0:
            raise ConfigError(f"t_f: must be positive, got {self.t_f}")


def ramp_lambda(ramp: RampSpec, t):
    """Quintic smoothstep and its first two time derivatives."""
    t = np.asarray(t, dtype=float)
    s = np.clip(t / ramp.t_f, 0.0, 1.0)
    inside = (t > 0) & (t < ramp.t_f)
    lam = s**3 * (10 - 15 * s + 6 * s**2)
    d1 = np.where(inside, 30 * s**2 * (1 - s) ** 2 / ramp.t_f, 0.0)
    d2 = np.where(inside, 60 * s * (1 - s) * (1 - 2 * s) / ramp.t_f**2, 0.0)
    if lam.ndim == 0:
        return float(lam), float(d1), float(d2)
    return lam, d1, d2


def auxiliary_fields(cfg: PotentialConfig, ramp: RampSpec, z, t, field: ThetaField | None = None):
    """Gauge fields (f, U) for theta(z, t) = lambda(t) theta(z), with f(0, t) = 0."""
    field = field or theta_from_V(cfg)
    lam, d1, d2 = ramp_lambda(ramp, t)
    T2 = field.Theta2(z)
    f = -0.5 * d1 * T2
    U = -0.5 * d2 * T2 - lam * field.V(z)
    return f, U
