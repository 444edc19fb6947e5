import numpy as np
import pytest
from conftest import mode_sets

from dirac1d.errors import DomainError, GapClosedError
from dirac1d.oracle import bound_states_shooting
from dirac1d.potentials import PotentialConfig, RampSpec, ThetaField, theta_from_V
from dirac1d.spectral import (
    FourierBasis,
    HamiltonianFactory,
    HamiltonianMatrix,
    assemble_A,
    assemble_B,
    assemble_general,
    chiral_map_modes,
    conjugation_defect,
    diagonalize,
    eigenvalues,
    evaluate_mode,
    free_modes,
    gram_residual,
    level_differences,
    residual_norms,
)

SMALL = PotentialConfig(N=32)


def free_levels(cfg):
    k = FourierBasis(cfg.L, cfg.N).k
    w = np.sqrt(k**2 + cfg.m**2)
    return np.sort(np.concatenate([-w, w]))


def test_free_spectrum():
    cfg = PotentialConfig(eta=0.0, N=64)
    assert np.max(np.abs(eigenvalues(assemble_A(cfg)) - free_levels(cfg))) < 1e-10
    assert np.max(np.abs(diagonalize(assemble_B(cfg)).energies - free_levels(cfg))) < 1e-10


def test_free_modes_analytic_match_diagonalisation():
    cfg = PotentialConfig(eta=0.0, N=24, L=10.0, a=2.0)
    fm = free_modes(FourierBasis(cfg.L, cfg.N), cfg.m)
    H = assemble_A(cfg).matrix
    C = fm.coeffs.toarray()
    assert np.max(np.abs(H @ C - C * fm.energies)) < 1e-12
    assert gram_residual(fm) < 1e-14


@pytest.mark.parametrize("seed", range(4))
def test_hermitian_random_configs(seed):
    r = np.random.default_rng(seed)
    a = r.uniform(1, 4)
    cfg = PotentialConfig(m=r.uniform(0.5, 2), eta=0.0, a=a, L=r.uniform(4 * a, 8 * a), N=int(r.integers(16, 48)))
    cfg = cfg.replace(eta=r.uniform(0, cfg.m))
    fac = HamiltonianFactory(cfg)
    for H in (fac.A(), fac.B(), fac.general(RampSpec(3.0), r.uniform(0, 3))):
        assert H.hermiticity_residual <= 1e-12


def test_B_without_angle_is_free_A():
    cfg = SMALL.replace(eta=0.0)
    assert np.array_equal(assemble_B(cfg).matrix, assemble_A(cfg).matrix)


def test_general_endpoints():
    fac = HamiltonianFactory(SMALL)
    r = RampSpec(20.0)
    assert np.max(np.abs(fac.general(r, -1.0).matrix - fac.A().matrix)) <= 1e-10
    assert np.max(np.abs(fac.general(r, 40.0).matrix - fac.B().matrix)) <= 1e-10
    assert fac.general(r, 7.3).hermiticity_residual <= 1e-12


def test_general_module_function_matches_factory():
    r = RampSpec(5.0)
    fac = HamiltonianFactory(SMALL)
    assert np.array_equal(assemble_general(SMALL, r, 2.0).matrix, fac.general(r, 2.0).matrix)


def test_stepper_matrix_matches_build():
    fac = HamiltonianFactory(SMALL)
    for lam, w, t2 in [(0.0, 1.0, 0.0), (0.37, 0.63, -0.02), (1.0, 0.0, 0.0)]:
        assert np.max(np.abs(fac.stepper_matrix(lam, w, t2) - fac.build(lam, w, t2))) < 1e-14


def test_diagonalize_counts_and_gram():
    _, mA, mB = mode_sets(64)
    for m in (mA, mB):
        assert len(m) == 2 * (2 * 64 + 1)
        assert np.sum(m.signs > 0) == np.sum(m.signs < 0)
        assert np.all(np.diff(m.energies) >= 0)
        assert gram_residual(m) <= 1e-10


def test_phase_convention():
    _, mA, _ = mode_sets(64)
    C = mA.coeffs
    piv = C[np.argmax(np.abs(C), axis=0), np.arange(C.shape[1])]
    assert np.all(piv > 0)


def test_diagonalize_is_deterministic():
    a = diagonalize(assemble_A(SMALL))
    b = diagonalize(assemble_A(SMALL))
    assert np.array_equal(a.energies, b.energies) and np.array_equal(a.coeffs, b.coeffs)


def test_gap_closed_error():
    basis = FourierBasis(10.0, 16)
    H = np.diag(np.linspace(-1, 1, basis.dim))
    H[basis.dim // 2, basis.dim // 2] = 0.0
    with pytest.raises(GapClosedError):
        diagonalize(HamiltonianMatrix(H, "test", basis, 1.0))


def test_mode_normalisation_by_quadrature():
    _, mA, _ = mode_sets(64)
    L = mA.basis.L
    z = -L / 2 + L * np.arange(4 * mA.basis.D) / (4 * mA.basis.D)
    u1, u2 = mA.evaluate(z, cols=[0, 100, 200])
    norms = (np.abs(u1) ** 2 + np.abs(u2) ** 2).sum(axis=0) * L / len(z)
    assert np.allclose(norms, 1.0, atol=1e-8)


def test_free_zero_momentum_mode():
    cfg = SMALL.replace(eta=0.0)
    fm = free_modes(FourierBasis(cfg.L, cfg.N), cfg.m)
    i = int(np.argmin(np.abs(fm.energies - cfg.m)))
    s = evaluate_mode(fm, i, [-3.0, 0.0, 7.5])
    assert all(abs(p.lower) < 1e-15 for p in s)
    assert np.allclose([p.upper for p in s], 1 / np.sqrt(cfg.L))


def test_periodicity_and_domain():
    _, mA, _ = mode_sets(64)
    z = np.array([-3.3, 0.1, 11.0])
    a = mA.evaluate(z, cols=[5, 200])
    b = mA.evaluate(z + mA.basis.L, cols=[5, 200])
    assert np.max(np.abs(a[0] - b[0])) < 1e-12 and np.max(np.abs(a[1] - b[1])) < 1e-12
    with pytest.raises(DomainError):
        evaluate_mode(mA, 0, 20.1)


def test_fft_evaluation_matches_direct():
    _, mA, _ = mode_sets(64)
    L = mA.basis.L
    z = -L / 2 + 0.37 + L * np.arange(100) / 100
    fast = mA.evaluate(z)
    F = mA.basis.plane_waves(z)
    D = mA.basis.D
    assert np.max(np.abs(fast[0] - F @ mA.coeffs[:D])) < 1e-12
    assert np.max(np.abs(fast[1] - F @ mA.coeffs[D:])) < 1e-12


def test_chiral_map_identity_for_zero_angle():
    cfg = SMALL.replace(eta=0.0)
    mA = diagonalize(assemble_A(cfg))
    mB = chiral_map_modes(mA, theta_from_V(cfg))
    assert np.max(np.abs(mB.projected - mA.coeffs)) < 1e-13
    z = np.linspace(-10, 10, 7)
    assert np.max(np.abs(mB.evaluate(z)[0] - mA.evaluate(z)[0])) < 1e-14
    assert not mB.warnings


def test_chiral_map_preserves_pointwise_density(rng):
    fac, mA, _ = mode_sets(64)
    mB = chiral_map_modes(mA, fac.field)
    z = rng.uniform(-20, 20, 100)
    a1, a2 = mA.evaluate(z)
    b1, b2 = mB.evaluate(z)
    assert np.max(np.abs(np.abs(a1) ** 2 + np.abs(a2) ** 2 - np.abs(b1) ** 2 - np.abs(b2) ** 2)) < 1e-10
    assert np.array_equal(mB.energies, mA.energies)


def test_chiral_map_gram_by_quadrature():
    # products of mapped modes are trigonometric polynomials: a fine uniform grid is exact
    fac, mA, _ = mode_sets(32)
    mB = chiral_map_modes(mA, fac.field)
    L = mB.basis.L
    z = -L / 2 + L * np.arange(8 * mB.basis.D) / (8 * mB.basis.D)
    u1, u2 = mB.evaluate(z)
    G = (u1.conj().T @ u1 + u2.conj().T @ u2) * L / len(z)
    assert np.max(np.abs(G - np.eye(len(mB)))) <= 1e-8
    assert gram_residual(mB) <= 1e-8


def test_chiral_map_records_projection_loss():
    fac, mA, _ = mode_sets(32)
    mB = chiral_map_modes(mA, fac.field)
    assert mB.projection_loss.max() > 1e-6
    assert mB.warnings and "projection loss" in mB.warnings[0]


def test_mapped_modes_become_B_eigenvectors():
    res = []
    for N in (64, 128, 256):
        fac, mA, _ = mode_sets(N)
        mB = chiral_map_modes(mA.select(mA.energies > 0), fac.field)
        i = int(np.argmin(mB.energies))
        res.append(residual_norms(fac.B(), mB, [i])[0])
    assert res[0] > res[1] > res[2]
    assert res[2] < 2e-5


def test_conjugation_defect_decreases():
    d = [conjugation_defect(PotentialConfig(N=N)) for N in (64, 128, 256)]
    assert d[0] > d[1] > d[2]


def test_spectra_agree_at_reference(reference):
    fac, mA, mB = reference
    d = level_differences(mA.energies, mB.energies, window=5.0)
    assert d.max() <= 1e-3


def test_parity_of_A_modes():
    fac, mA, _ = mode_sets(64)
    n = mA.basis.n
    D = mA.basis.D
    C = mA.coeffs
    # u(-z) = +- gamma0 u(z): upper block flips k, lower block flips k and sign
    P = np.concatenate([C[:D][::-1], -C[D:][::-1]])
    s = np.sum(np.conj(C) * P, axis=0)
    assert np.allclose(np.abs(s), 1.0, atol=1e-8)
    assert np.max(np.abs(P - C * s)) < 1e-8
    assert n[0] == -n[-1]


def test_bound_state_matches_shooting(reference):
    fac, mA, _ = reference
    cfg = fac.cfg
    roots = bound_states_shooting(cfg).energies
    gap = mA.energies[(mA.energies > cfg.shift - cfg.m) & (mA.energies < cfg.shift + cfg.m)]
    assert len(gap) == len(roots)
    assert np.max(np.abs(gap - roots) / np.abs(roots)) < 1e-4


def test_level_difference_rejects_mismatched_vacua():
    with pytest.raises(ValueError):
        level_differences(np.array([-1.0, 1.0, 2.0]), np.array([-1.0, -0.5, 2.0]))


def test_generic_profile_assembles_complex():
    f = ThetaField.from_profile([-10.0, -1.0, 0.5, 10.0], [0.0, -0.4, 0.1], 20.0, compensate=True)
    cfg = PotentialConfig(N=24, L=20.0, a=4.0)
    fac = HamiltonianFactory(cfg, f)
    HB = fac.B()
    assert np.iscomplexobj(HB.matrix) and HB.hermiticity_residual <= 1e-12
    R = fac.general(RampSpec(2.0), 1.0)
    assert R.hermiticity_residual <= 1e-12
    eA, eB = eigenvalues(fac.A()), eigenvalues(HB)
    assert level_differences(eA, eB, window=2.0).max() < 1e-3
