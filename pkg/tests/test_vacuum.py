import numpy as np
import pytest
from conftest import mode_sets
from scipy.special import k1

from dirac1d.errors import WindowError
from dirac1d.potentials import PotentialConfig
from dirac1d.spectral import FourierBasis, assemble_A, chiral_map_modes, diagonalize
from dirac1d.vacuum import (
    abs_p_closed_form,
    anomaly_difference,
    capri_check,
    check_epsilons,
    clear_of_kinks,
    damped_exponential_integral,
    default_epsilons,
    density_split,
    density_unreg,
    free_bilinear_analytic,
    free_bilinear_box,
    free_bilinear_exact,
    gamma5_bilinear,
    gamma5_bilinear_profile,
    linear_fit,
    min_split,
    profile_grid,
)

FREE = PotentialConfig(eta=0.0, N=64)


@pytest.fixture(scope="module")
def free_modes64():
    return diagonalize(assemble_A(FREE))


def test_free_density_vanishes(free_modes64):
    z = profile_grid(FREE.L, 64)
    assert np.max(np.abs(density_unreg(free_modes64, z).values)) < 1e-10
    assert np.max(np.abs(density_unreg(free_modes64, z, Lambda=5.0).values)) < 1e-10
    assert np.max(np.abs(density_split(free_modes64, z, 0.5).values)) < 1e-10


def test_mapped_modes_give_identical_density():
    fac, mA, _ = mode_sets(64)
    mB = chiral_map_modes(mA, fac.field)
    z = profile_grid(40.0, 128)
    for Lam in (None, 5.0):
        a, b = density_unreg(mA, z, Lam).values, density_unreg(mB, z, Lam).values
        assert np.max(np.abs(a - b)) < 1e-10


def test_split_tends_to_unsplit():
    _, mA, _ = mode_sets(64)
    z = profile_grid(40.0, 64)
    a = density_split(mA, z, 1e-7, enforce_window=False).values
    assert np.max(np.abs(a - density_unreg(mA, z).values)) < 1e-6


def test_incomplete_mode_set_rejected():
    _, mA, _ = mode_sets(64)
    with pytest.raises(ValueError):
        density_unreg(mA.select(mA.energies < 0), [0.0])


def test_split_window_error_names_minimum(free_modes64):
    lo = min_split(free_modes64.basis)
    with pytest.raises(WindowError, match="4/k_max"):
        density_split(free_modes64, [0.0], 0.5 * lo)


def test_density_metadata(free_modes64):
    p = density_split(free_modes64, [0.0], 0.5, Lambda=3.0)
    assert p.meta["epsilon"] == 0.5 and p.meta["cutoff"] == 64 and p.meta["damping"] == 3.0


def test_free_bilinear_antisymmetric(free_modes64):
    e = 0.6
    z = np.array([-2.0, 0.0, 5.0])
    a = gamma5_bilinear_profile(free_modes64, z, e)
    b = gamma5_bilinear_profile(free_modes64, z, -e)
    assert np.max(np.abs(a + b)) < 1e-10
    assert np.max(np.abs(a.real)) < 1e-12


def test_free_bilinear_equals_box_sum(free_modes64):
    for e in (0.5, 0.7):
        v = gamma5_bilinear(free_modes64, 1.3, e).value
        assert abs(v - free_bilinear_box(free_modes64.basis, 1.0, e)[0]) < 1e-10


def test_box_sum_approaches_continuum():
    # large box, damped: only the regulator and box corrections remain
    b = FourierBasis(10.0, 8192)
    eps = np.array([0.02, 0.05, 0.1])
    box = free_bilinear_box(b, 1.0, eps, Lambda=b.k_max / 4.5)
    cont = free_bilinear_exact(1.0, eps)
    assert np.max(np.abs(box / cont - 1)) < 0.02


def test_well_bilinear_short_distance_matches_free():
    fac, mA, _ = mode_sets(128)
    lo = min_split(mA.basis)
    for e in (lo, 2 * lo):
        v = gamma5_bilinear(mA, 0.0, e).value
        f = free_bilinear_box(mA.basis, 1.0, e)[0]
        assert abs(v / f - 1) < 0.05


def test_analytic_leading_term():
    r = free_bilinear_analytic(1.0, 0.01)
    assert abs(abs(r.value) / abs(r.asymptote) - 1) < 0.01
    assert r.value.imag > 0


def test_analytic_large_separation_suppressed():
    r = free_bilinear_analytic(1.0, 10.0)
    assert abs(r.value) / abs(r.asymptote) < 1e-3
    assert abs(r.value - r.closed_form) < 1e-6


def test_abs_p_variant_matches_dawson():
    eps, pm = 0.05, 4000.0
    r = free_bilinear_analytic(1.0, eps, pm)
    assert abs(r.abs_p_value.imag - 2 / np.pi * abs_p_closed_form(eps, pm)) < 1e-7 * abs(r.abs_p_value)


def test_analytic_window():
    with pytest.raises(WindowError):
        free_bilinear_analytic(1.0, 0.01, p_max=100.0)
    with pytest.raises(WindowError):
        free_bilinear_analytic(1.0, -0.1)


def test_closed_form_is_k1():
    assert abs(free_bilinear_exact(2.0, 0.3) - 2j / np.pi * 2 * k1(0.6)) < 1e-15


def test_damped_exponential_integral():
    eps = 0.7
    v = damped_exponential_integral(eps, 1e-4)
    target = -1 / (1j * eps)
    assert abs(v - target) / abs(target) < 1e-3


def test_epsilon_helpers():
    cfg = PotentialConfig()
    eps = default_epsilons(cfg)
    assert check_epsilons(cfg, eps) is not None
    with pytest.raises(WindowError):
        check_epsilons(cfg, [0.01, 0.2])
    with pytest.raises(WindowError):
        check_epsilons(cfg, [0.2])
    pad = 2 / cfg.k_max
    ok = clear_of_kinks(cfg, np.array([0.0, 2.0 - pad / 2, 2.0 - 0.1 - pad / 2]), reach=0.1)
    assert ok.tolist() == [True, False, False]


def test_linear_fit_exact():
    e = np.linspace(0.1, 0.5, 5)
    y = np.column_stack([1 + 2 * e, -3 + 0.5 * e])
    c0, c1, rms = linear_fit(e, y)
    assert np.allclose(c0, [1, -3]) and np.allclose(c1, [2, 0.5]) and np.all(rms < 1e-12)


def test_anomaly_free_field_zero(free_modes64):
    z = profile_grid(FREE.L, 32)
    rep = anomaly_difference(FREE, free_modes64, free_modes64, z, default_epsilons(FREE, 3))
    assert np.max(np.abs(rep.difference)) == 0.0
    assert rep.plateau_error < 1e-12


def test_anomaly_small_N_structure():
    cfg = PotentialConfig(N=128)
    _, mA, mB = mode_sets(128)
    rep = anomaly_difference(cfg, mA, mB, profile_grid(cfg.L, 256), default_epsilons(cfg, 5))
    assert rep.interior.sum() > 10
    assert rep.bilinear_sign == 1.0
    # plateau sits near V/pi inside the well even at N=128
    assert rep.plateau_error < 0.15
    assert rep.profile().values.shape == rep.z.shape


def test_total_vacuum_charge_equal():
    _, mA, mB = mode_sets(64)
    z = profile_grid(40.0, 4 * mA.basis.D)
    qa = density_unreg(mA, z).values.sum() * 40.0 / len(z)
    qb = density_unreg(mB, z).values.sum() * 40.0 / len(z)
    assert abs(qa - qb) < 1e-8


def test_capri_small_N_runs():
    cfg = PotentialConfig(N=64)
    _, mA, _ = mode_sets(64)
    rep = capri_check(cfg, mA, profile_grid(40.0, 128), default_epsilons(cfg, 3))
    assert np.isfinite(rep.error_A_inside) and rep.interior.any() and rep.outside.any()


def test_regularized_bilinear_scales_as_inverse_eps(reference):
    from dirac1d.vacuum import regularized_bilinear

    fac, mA, _ = reference
    lo = min_split(mA.basis)
    eps = np.linspace(lo, 0.2, 6)
    scaled = np.array([abs(regularized_bilinear(mA, [0.0], e, 1.0)[0]) * e for e in eps])
    assert scaled.max() / scaled.min() - 1 <= 0.05
