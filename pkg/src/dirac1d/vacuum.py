"""Vacuum charge densities and the gamma5 two-point function from mode sums.

Charge density uses the half-commutator convention:
rho = (1/2) [sum_{E<0} - sum_{E>0}] (mode bilinear).

Two regulators appear. Point splitting keeps every mode of the truncated
basis (a momentum cutoff) and separates the two field arguments by eps. The
"unregularized" sums are taken with a smooth energy damping exp(-(E/Lambda)^2),
symmetric in the sign of E; without it the truncated sum would coincide with
the eps -> 0 limit of the split one and the two could not be compared.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import quad
from scipy.special import dawsn, k1

from .errors import ConfigError, WindowError
from .potentials import PotentialConfig, ThetaField, theta_from_V
from .spectral import FourierBasis, ModeSet

CONVENTION = "half-commutator"
REAL_TOL = 1e-10


@dataclass
class DensityProfile:
    z_grid: np.ndarray
    values: np.ndarray
    meta: dict = dc_field(default_factory=dict)


@dataclass(frozen=True)
class BilinearSample:
    z: float
    epsilon: float
    value: complex


def profile_grid(L: float, points: int = 512) -> np.ndarray:
    """Uniform periodic grid on [-L/2, L/2)."""
    return -L / 2 + L * np.arange(points) / points


def damping_factors(E: np.ndarray, Lambda: float | None) -> np.ndarray:
    if Lambda is None:
        return np.ones_like(E)
    return np.exp(-((E / Lambda) ** 2))


def min_split(basis: FourierBasis) -> float:
    return 4.0 / basis.k_max


def check_split(basis: FourierBasis, eps: float) -> None:
    lo = min_split(basis)
    if abs(eps) < lo * (1 - 1e-12):
        raise WindowError(f"|epsilon| = {abs(eps):.4g} below the resolvable minimum 4/k_max = {lo:.4g}")


def _weights(modes: ModeSet, Lambda: float | None) -> np.ndarray:
    return -0.5 * modes.signs * damping_factors(modes.energies, Lambda)


def _require_complete(modes: ModeSet) -> None:
    if not modes.complete:
        raise ValueError(f"mode set {modes.label!r} is incomplete ({len(modes)} of {modes.basis.dim})")


def _meta(modes: ModeSet, eps, Lambda) -> dict:
    return {
        "epsilon": eps,
        "cutoff": modes.basis.N,
        "damping": Lambda,
        "system": modes.label,
        "convention": CONVENTION,
    }


def _split_sum(U0, Ue, w) -> np.ndarray:
    """Symmetrised (1/2)[u^+(z+e)u(z) + u^+(z)u(z+e)] weighted over modes."""
    a = (Ue[0].conj() * U0[0] + Ue[1].conj() * U0[1]) @ w
    val = 0.5 * (a + a.conj())
    scale = max(1.0, float(np.max(np.abs(val), initial=0.0)))
    if np.max(np.abs(val.imag), initial=0.0) > REAL_TOL * scale:
        raise RuntimeError("split density has a non-negligible imaginary part")
    return val.real


def _bilinear_sum(U0, Ue, g) -> np.ndarray:
    """sum g [u^+(z+e) s1 u(z) - u^+(z) s1 u(z+e)] over the supplied modes."""
    x = (Ue[0].conj() * U0[1] + Ue[1].conj() * U0[0]) @ g
    return x - x.conj()


def density_unreg(modes: ModeSet, grid, Lambda: float | None = None) -> DensityProfile:
    _require_complete(modes)
    z = np.asarray(grid, dtype=float)
    u1, u2 = modes.evaluate(z)
    rho = (np.abs(u1) ** 2 + np.abs(u2) ** 2) @ _weights(modes, Lambda)
    return DensityProfile(z, rho, _meta(modes, None, Lambda))


def density_split(
    modes: ModeSet, grid, epsilon: float, Lambda: float | None = None, enforce_window: bool = True
) -> DensityProfile:
    _require_complete(modes)
    if enforce_window:
        check_split(modes.basis, epsilon)
    z = np.asarray(grid, dtype=float)
    rho = _split_sum(modes.evaluate(z), modes.evaluate(z + epsilon), _weights(modes, Lambda))
    return DensityProfile(z, rho, _meta(modes, epsilon, Lambda))


def gamma5_bilinear_profile(
    modes: ModeSet, z, epsilon: float, Lambda: float | None = None, enforce_window: bool = True
) -> np.ndarray:
    if enforce_window:
        check_split(modes.basis, epsilon)
    neg = modes.select(modes.energies < 0)
    z = np.atleast_1d(np.asarray(z, dtype=float))
    g = damping_factors(neg.energies, Lambda)
    return _bilinear_sum(neg.evaluate(z), neg.evaluate(z + epsilon), g)


def gamma5_bilinear(
    modes: ModeSet, z: float, epsilon: float, Lambda: float | None = None, enforce_window: bool = True
) -> BilinearSample:
    v = complex(gamma5_bilinear_profile(modes, [z], epsilon, Lambda, enforce_window)[0])
    if abs(v.real) > 1e-8 * max(abs(v), 1e-300):
        raise RuntimeError("bilinear expectation is not purely imaginary")
    return BilinearSample(float(z), float(epsilon), v)


# ---------------------------------------------------------------------------
# free field


def free_bilinear_exact(m: float, epsilon):
    """Continuum value (2i/pi) m K1(m eps) of the negative-energy bilinear."""
    eps = np.asarray(epsilon, dtype=float)
    return 2j / np.pi * m * k1(m * np.abs(eps)) * np.sign(eps)


def free_bilinear_box(basis: FourierBasis, m: float, epsilon, Lambda: float | None = None):
    """Plane-wave mode sum (2i/L) sum_n g(w_n) (k_n/w_n) sin(k_n eps) in a periodic box."""
    k = basis.k
    w = np.sqrt(k**2 + m**2)
    g = damping_factors(w, Lambda)
    eps = np.atleast_1d(np.asarray(epsilon, dtype=float))
    return 2j / basis.L * (np.sin(np.outer(eps, k)) @ (g * k / w))


@dataclass(frozen=True)
class FreeBilinear:
    value: complex
    abs_p_value: complex
    asymptote: complex
    closed_form: complex


def free_bilinear_analytic(m: float, epsilon: float, p_max: float | None = None) -> FreeBilinear:
    """Momentum integral (2i/pi) int_0^inf (p/E) sin(p eps) exp(-(p/p_max)^2) dp.

    Also returns the variant with p/E -> 1 (massless replacement at large p),
    the asymptote 2i/(pi eps) and the undamped closed form.
    """
    eps = float(epsilon)
    if eps <= 0:
        raise WindowError("epsilon must be positive")
    p_max = 200.0 / eps if p_max is None else float(p_max)
    if eps * p_max < 10:
        raise WindowError(f"need p_max * eps >= 10 (got {eps * p_max:.3g}); damping would dominate")
    top = 8.0 * p_max
    f = lambda p: p / np.hypot(p, m) * np.exp(-((p / p_max) ** 2))
    val, _ = quad(f, 0, top, weight="sin", wvar=eps, limit=4000, epsabs=0, epsrel=1e-9)
    g = lambda p: np.exp(-((p / p_max) ** 2))
    val_abs, _ = quad(g, 0, top, weight="sin", wvar=eps, limit=4000, epsabs=0, epsrel=1e-9)
    return FreeBilinear(
        2j / np.pi * val,
        2j / np.pi * val_abs,
        2j / (np.pi * eps),
        complex(free_bilinear_exact(m, eps)),
    )


def abs_p_closed_form(epsilon: float, p_max: float) -> float:
    """int_0^inf sin(p eps) exp(-(p/p_max)^2) dp = p_max * F(eps p_max / 2), F = Dawson."""
    return p_max * dawsn(epsilon * p_max / 2)


def damped_exponential_integral(epsilon: float, delta: float) -> complex:
    """int_0^inf exp(i p eps) exp(-delta p) dp by oscillatory quadrature."""
    f = lambda p: np.exp(-delta * p)
    re, _ = quad(f, 0, np.inf, weight="cos", wvar=epsilon)
    im, _ = quad(f, 0, np.inf, weight="sin", wvar=epsilon)
    return complex(re, im)


# ---------------------------------------------------------------------------
# anomaly relations


def epsilon_window(cfg: PotentialConfig) -> tuple[float, float]:
    return 4.0 / cfg.k_max, 0.5 / cfg.m


def default_epsilons(cfg: PotentialConfig, count: int = 9) -> np.ndarray:
    lo, hi = epsilon_window(cfg)
    return np.linspace(lo, hi, count)


def check_epsilons(cfg: PotentialConfig, eps_list) -> np.ndarray:
    eps = np.asarray(eps_list, dtype=float)
    lo, hi = epsilon_window(cfg)
    bad = eps[(eps < lo * (1 - 1e-12)) | (eps > hi * (1 + 1e-12))]
    if eps.size < 2 or bad.size:
        raise WindowError(
            f"epsilon list must hold >= 2 values inside [{lo:.4g}, {hi:.4g}]; offending: {bad.tolist()}"
        )
    return eps


def clear_of_kinks(cfg: PotentialConfig, z: np.ndarray, reach: float = 0.0) -> np.ndarray:
    """True where the split interval [z, z + reach] stays 2/k_max away from both well edges."""
    z = np.asarray(z, dtype=float)
    pad = 2.0 / cfg.k_max
    ok = np.ones(z.shape, dtype=bool)
    for edge in (-cfg.a / 2, cfg.a / 2):
        ok &= (z + reach < edge - pad) | (z > edge + pad)
    return ok


def well_interior(cfg: PotentialConfig, z: np.ndarray, reach: float = 0.0) -> np.ndarray:
    return clear_of_kinks(cfg, z, reach) & (np.abs(z) < cfg.a / 2)


def well_exterior(cfg: PotentialConfig, z: np.ndarray, reach: float = 0.0) -> np.ndarray:
    return clear_of_kinks(cfg, z, reach) & (np.abs(z) > cfg.a / 2)


def linear_fit(eps: np.ndarray, values: np.ndarray):
    """Least squares values ~ c0 + c1 eps per column; returns (c0, c1, rms residual)."""
    X = np.column_stack([np.ones_like(eps), eps])
    coef, *_ = np.linalg.lstsq(X, values, rcond=None)
    resid = values - X @ coef
    return coef[0], coef[1], np.sqrt(np.mean(resid**2, axis=0))


def regularized_bilinear(
    modes: ModeSet, z, epsilon: float, m: float, U0=None, Ue=None
) -> np.ndarray:
    """Negative-energy bilinear with the free-field cutoff artefact removed.

    The sharp momentum cutoff adds an oscillating (1 - cos k_max eps)/eps piece
    that is identical for the free plane-wave sum in the same box; subtracting
    that sum and adding back the continuum value leaves the background effect.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    neg = modes.select(modes.energies < 0)
    if U0 is None:
        U0 = neg.evaluate(z)
    if Ue is None:
        Ue = neg.evaluate(z + epsilon)
    raw = _bilinear_sum(U0, Ue, np.ones(len(neg)))
    free_box = free_bilinear_box(modes.basis, m, epsilon)[0]
    return raw - free_box + free_bilinear_exact(m, epsilon)


@dataclass
class AnomalyReport:
    z: np.ndarray
    epsilons: np.ndarray
    rho_A: np.ndarray
    rho_B: np.ndarray
    difference: np.ndarray
    reconstruction: np.ndarray
    bilinear: np.ndarray
    intercept: np.ndarray
    slope: np.ndarray
    fit_rms: np.ndarray
    expected: np.ndarray
    interior: np.ndarray
    plateau_error: float
    reconstruction_error: float
    bilinear_sign: float
    plateau_detected: bool
    diagnostics: list[str] = dc_field(default_factory=list)

    def profile(self) -> DensityProfile:
        return DensityProfile(self.z, self.intercept, {"epsilon": "extrapolated", "convention": CONVENTION})


def _split_family(modes: ModeSet, z, eps_list):
    w = _weights(modes, None)
    neg_idx = np.flatnonzero(modes.energies < 0)
    U0 = modes.evaluate(z)
    rho, B = [], []
    for e in eps_list:
        Ue = modes.evaluate(z + e)
        rho.append(_split_sum(U0, Ue, w))
        B.append((U0, Ue, neg_idx))
    return np.array(rho), U0, B


def anomaly_difference(
    cfg: PotentialConfig,
    modesA: ModeSet,
    modesB: ModeSet,
    grid,
    epsilon_list,
    field: ThetaField | None = None,
    fit_threshold: float = 0.05,
) -> AnomalyReport:
    """rho_B(z; eps) - rho_A(z; eps), its eps -> 0 plateau, and the gamma5 reconstruction."""
    _require_complete(modesA)
    _require_complete(modesB)
    eps = check_epsilons(cfg, epsilon_list)
    field = field or theta_from_V(cfg)
    z = np.asarray(grid, dtype=float)
    wA, wB = _weights(modesA, None), _weights(modesB, None)
    negA = modesA.energies < 0
    U0A, U0B = modesA.evaluate(z), modesB.evaluate(z)
    V = field.V(z)
    thp = field.theta_prime(z)
    rA, rB, bil = [], [], []
    free_box = free_bilinear_box(modesA.basis, cfg.m, eps)
    for i, e in enumerate(eps):
        UeA, UeB = modesA.evaluate(z + e), modesB.evaluate(z + e)
        rA.append(_split_sum(U0A, UeA, wA))
        rB.append(_split_sum(U0B, UeB, wB))
        raw = _bilinear_sum((U0A[0][:, negA], U0A[1][:, negA]), (UeA[0][:, negA], UeA[1][:, negA]),
                            np.ones(int(negA.sum())))
        bil.append(raw - free_box[i] + free_bilinear_exact(cfg.m, e))
    rA, rB, bil = np.array(rA), np.array(rB), np.array(bil)
    diff = rB - rA
    recon = (0.25j * bil * thp[None, :] * eps[:, None]).real
    c0, c1, rms = linear_fit(eps, diff)
    expected = V / np.pi
    interior = well_interior(cfg, z, eps.max())
    # relative to |V|/pi; absolute when there is no well
    scale = np.abs(expected[interior]) if cfg.eta > 0 else np.ones(int(interior.sum()))
    plateau_err = float(np.max(np.abs(c0[interior] - expected[interior]) / scale)) if interior.any() else np.nan
    rec_err = (
        float(np.max(np.abs(diff[:, interior] - recon[:, interior]) / scale[None, :]))
        if interior.any()
        else np.nan
    )
    detected = bool(np.all(rms[interior] <= fit_threshold * scale))
    diags = []
    if not detected:
        diags.append(f"linear fit residual above {fit_threshold:g} |V|/pi at some interior points")
    sign = float(np.sign(np.median(bil.imag)))
    return AnomalyReport(z, eps, rA, rB, diff, recon, bil, c0, c1, rms, expected, interior,
                         plateau_err, rec_err, sign, detected, diags)


@dataclass
class CapriReport:
    z: np.ndarray
    epsilons: np.ndarray
    Lambda: float
    rho_A_limit: np.ndarray
    rho_A_unreg: np.ndarray
    shift_A: np.ndarray
    expected_A: np.ndarray
    interior: np.ndarray
    outside: np.ndarray
    error_A_inside: float
    error_A_outside: float
    rho_B_limit: np.ndarray | None = None
    rho_B_unreg: np.ndarray | None = None
    shift_B: np.ndarray | None = None
    error_B: float | None = None


def capri_check(
    cfg: PotentialConfig,
    modesA: ModeSet,
    grid,
    epsilon_list,
    modesB: ModeSet | None = None,
    Lambda: float | None = None,
    field: ThetaField | None = None,
) -> CapriReport:
    """Point-split eps -> 0 density minus the energy-damped sum.

    Inside the well the A shift is compared with -V/pi relative to |V|/pi;
    outside, with -V/pi relative to eta/pi. The B shift is reported relative
    to eta/pi.
    """
    Lambda = cfg.Lambda_damp if Lambda is None else Lambda
    if Lambda is None:
        raise ConfigError("Lambda_damp: an energy damping scale is required for the unregularized sums")
    eps = check_epsilons(cfg, epsilon_list)
    field = field or theta_from_V(cfg)
    z = np.asarray(grid, dtype=float)
    V = field.V(z)
    unit = cfg.eta / np.pi if cfg.eta > 0 else 1.0

    def limit(modes):
        rho = np.array([density_split(modes, z, e).values for e in eps])
        return linear_fit(eps, rho)[0]

    limA = limit(modesA)
    unA = density_unreg(modesA, z, Lambda).values
    shift = limA - unA
    expected = -V / np.pi
    interior = well_interior(cfg, z, eps.max())
    outside = well_exterior(cfg, z, eps.max())
    scale = np.abs(expected[interior]) if cfg.eta > 0 else 1.0
    err_in = float(np.max(np.abs(shift[interior] - expected[interior]) / scale))
    err_out = float(np.max(np.abs(shift[outside] - expected[outside]))) / unit
    rep = CapriReport(z, eps, Lambda, limA, unA, shift, expected, interior, outside, err_in, err_out)
    if modesB is not None:
        limB = limit(modesB)
        unB = density_unreg(modesB, z, Lambda).values
        rep.rho_B_limit, rep.rho_B_unreg, rep.shift_B = limB, unB, limB - unB
        rep.error_B = float(np.max(np.abs(rep.shift_B[clear_of_kinks(cfg, z, eps.max())]))) / unit
    return rep
