import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from dirac1d.algebra import IDENTITY, SpinorSample, chiral_rotation, mass_phase, standard_rep

angles = st.floats(min_value=-10, max_value=10, allow_nan=False)


def test_standard_rep_entries():
    g = standard_rep()
    assert np.array_equal(g.gamma5, [[0, 1], [1, 0]])
    assert np.array_equal(g.gamma0, [[1, 0], [0, -1]])
    assert np.array_equal(g.gamma0 @ g.gamma0, IDENTITY)
    # sigma3 sigma1 = i sigma2, a real matrix
    assert np.array_equal(g.gamma1, [[0, 1], [-1, 0]])
    assert np.array_equal(g.gamma1, g.gamma0 @ g.gamma5)


def test_identities_hold():
    assert max(standard_rep().residuals().values()) < 1e-14


def test_gamma5_anticommutes_exactly():
    g = standard_rep()
    assert np.count_nonzero(g.gamma5 @ g.gamma0 + g.gamma0 @ g.gamma5) == 0


def test_rep_is_immutable():
    g = standard_rep()
    try:
        g.gamma0[0, 0] = 5
    except ValueError:
        pass
    assert standard_rep().gamma0[0, 0] == 1


def test_rotation_examples():
    assert np.array_equal(chiral_rotation(0.0), IDENTITY)
    U = chiral_rotation(0.7)
    assert np.max(np.abs(U.conj().T @ U - IDENTITY)) < 1e-14


@given(angles)
def test_rotation_intertwines_gamma0(theta):
    g0 = standard_rep().gamma0
    lhs = chiral_rotation(-theta) @ g0  # exp(+i g5 theta/2) g0
    rhs = g0 @ chiral_rotation(theta)
    assert np.max(np.abs(lhs - rhs)) < 1e-14


@given(angles, angles)
def test_rotation_group_law(t1, t2):
    prod = chiral_rotation(t1) @ chiral_rotation(t2)
    assert np.max(np.abs(prod - chiral_rotation(t1 + t2))) < 1e-13


@settings(max_examples=200)
@given(angles)
def test_rotation_inverse(theta):
    assert np.max(np.abs(chiral_rotation(theta) @ chiral_rotation(-theta) - IDENTITY)) < 1e-13


@given(angles)
def test_mass_phase_is_double_rotation(theta):
    g0 = standard_rep().gamma0
    R = chiral_rotation(theta)
    # R^dagger g0 R = g0 R^2 = g0 exp(-i g5 theta)
    assert np.max(np.abs(g0 @ mass_phase(-theta) - R.conj().T @ g0 @ R)) < 1e-13


def test_spinor_sample_rejects_nan():
    SpinorSample(1.0, 2j)
    for bad in (np.nan, np.inf):
        try:
            SpinorSample(bad, 0)
        except ValueError:
            continue
        raise AssertionError("non-finite component accepted")
