"""Adiabatic-elimination models: structure checks, limits, and certificates."""

import numpy as np
import pytest

from qsdecert import (
    AeConstants,
    AeModel,
    ApproxState,
    InsufficientTruncationError,
    InvalidDimensionError,
    InvalidModelError,
    InvalidParameterError,
    PartitionError,
    SimpleFunction,
    StructuralModelError,
    ae_certificate_table,
    ae_interval_sum,
    ae_operators,
    ae_semigroup_error,
    ae_theorem_bound,
    ae_variant_error,
    atom_cavity_ae,
    exp_norm,
    limit_coefficients,
    m_constants,
    opnorm,
    oscillator_elimination,
)

GAMMA, G_COUP, DRIVE = 25.0, 5.0, 0.1

Z1 = np.zeros((1, 1))


def _osc(e11=-GAMMA / 2.0, J_max=4):
    return oscillator_elimination(
        Z1, Z1, Z1, [[e11]], [np.array([[np.sqrt(GAMMA)]])], [Z1], [[np.eye(1)]],
        J_max=J_max,
    )


def _rebuild(m, **over):
    kw = dict(
        Y=m.Y, Ytilde=m.Ytilde, A=m.A, B=m.B, F=list(m.F), G=list(m.G),
        W=[list(r) for r in m.W], P0=m.P0, level_of_basis=m.level_of_basis,
        J_max=m.J_max, represented=m.represented, k=m.k, label=m.label,
    )
    kw.update(over)
    return AeModel(**kw)


def test_oscillator_elimination_closed_form_limit():
    m = _osc()
    red = limit_coefficients(m)
    np.testing.assert_allclose(red.S[0][0], [[-1.0]], atol=1e-12)
    np.testing.assert_allclose(red.L[0], [[0.0]], atol=1e-12)
    np.testing.assert_allclose(red.H, [[0.0]], atol=1e-12)


def test_oscillator_elimination_wrong_sign_fast_block():
    # dissipation pointing the wrong way: limit scattering loses unitarity
    bad = _osc(e11=+GAMMA / 2.0)
    with pytest.raises(StructuralModelError):
        limit_coefficients(bad)


def test_oscillator_elimination_singular_fast_block():
    sing = np.array([[1.0, 1.0], [1.0, 1.0 + 1e-15]])
    z2 = np.zeros((2, 2))
    with pytest.raises(InvalidModelError):
        oscillator_elimination(z2, z2, z2, sing, [np.eye(2)], [z2], [[np.eye(2)]])


def test_structural_validation():
    m = _osc()
    p_half = m.P0.copy()
    p_half[m.h0_indices[0], m.h0_indices[0]] = 0.5
    with pytest.raises(StructuralModelError):
        _rebuild(m, P0=p_half)
    with pytest.raises(StructuralModelError):
        _rebuild(m, P0=np.zeros_like(m.P0))
    y_bad = m.Y.copy()
    y_bad[m.h0_indices[0], m.h0_indices[0]] = 1.0
    with pytest.raises(StructuralModelError):
        _rebuild(m, Y=y_bad)
    with pytest.raises(StructuralModelError):
        _rebuild(m, Ytilde=1.01 * m.Ytilde)
    with pytest.raises(StructuralModelError):
        _rebuild(m, F=[np.ones((m.dim, m.dim))])
    with pytest.raises(StructuralModelError):
        _rebuild(m, A=m.P0.copy())
    with pytest.raises(InvalidDimensionError):
        _rebuild(m, G=[np.zeros((m.dim, m.dim))] * 2)  # channel count mismatch
    with pytest.raises(InvalidDimensionError):
        _rebuild(m, B=np.zeros((m.dim + 1, m.dim + 1)))


def test_atom_cavity_ae_pseudoinverse_structure():
    for j_max in (4, 6):
        m = atom_cavity_ae(GAMMA, G_COUP, DRIVE, J_max=j_max)
        off = np.eye(m.dim) - m.P0
        idx = np.ix_(m.represented, m.represented)
        assert np.abs((m.Ytilde @ m.Y - off)[idx]).max() <= 1e-12
        assert np.abs((m.Y @ m.Ytilde - off)[idx]).max() <= 1e-12
    with pytest.raises(InvalidParameterError):
        atom_cavity_ae(-1.0, G_COUP, DRIVE)
    with pytest.raises(InvalidParameterError):
        atom_cavity_ae(GAMMA, 0.0, DRIVE)
    with pytest.raises(InvalidParameterError):
        atom_cavity_ae(GAMMA, G_COUP, DRIVE, J_max=1)


def test_atom_cavity_ae_resolvent_denominators():
    # d_j = j(j-1) gamma^2/4 + j g^2 shows up inverted in the -g sqrt(j) slots
    m = atom_cavity_ae(GAMMA, G_COUP, DRIVE, J_max=4)
    df = m.J_max + 1
    plus_1, e_0 = 1 * df + 1, 0 * df + 0
    plus_2, e_1 = 1 * df + 2, 0 * df + 1
    d1 = -G_COUP * 1.0 / m.Ytilde[plus_1, e_0].real
    d2 = -G_COUP * np.sqrt(2.0) / m.Ytilde[plus_2, e_1].real
    assert d1 == pytest.approx(25.0, rel=1e-12)
    assert d2 == pytest.approx(362.5, rel=1e-12)


def test_atom_cavity_ae_limit_matches_closed_form():
    for j_max in (4, 6):
        m = atom_cavity_ae(GAMMA, G_COUP, DRIVE, J_max=j_max)
        red = limit_coefficients(m)
        s = red.S[0][0]
        assert opnorm(s @ s.conj().T - np.eye(2)) <= 1e-10
        assert opnorm(red.H - red.H.conj().T) <= 1e-10
        # slow space is ordered (|+,0>, |-,0>)
        np.testing.assert_allclose(s, np.diag([1.0, -1.0]), atol=1e-12)
        expected_l = np.zeros((2, 2), dtype=complex)
        expected_l[0, 1] = -DRIVE * np.sqrt(GAMMA) / G_COUP
        np.testing.assert_allclose(red.L[0], expected_l, atol=1e-12)
        np.testing.assert_allclose(red.H, np.zeros((2, 2)), atol=1e-12)


def test_ae_operators_balanced_drive():
    m = atom_cavity_ae(GAMMA, G_COUP, DRIVE, J_max=4)
    a_op, b_op = ae_operators(m, [DRIVE], [DRIVE])
    np.testing.assert_allclose(b_op, np.zeros_like(b_op), atol=1e-12)
    expected_a = m.A + DRIVE * (m.F[0] - m.F[0].conj().T)
    np.testing.assert_allclose(a_op, expected_a, atol=1e-12)


def test_ae_constants_validation():
    with pytest.raises(InvalidParameterError):
        AeConstants(M1=np.inf, M2=1.0, k=10.0)
    with pytest.raises(InvalidParameterError):
        AeConstants(M1=1.0, M2=1.0, k=0.0)


def test_m_constants_anchors_and_scaling():
    m = atom_cavity_ae(GAMMA, G_COUP, DRIVE, J_max=4)
    c4 = m_constants(m.with_k(10**4), [DRIVE], [DRIVE])
    c6 = m_constants(m.with_k(10**6), [DRIVE], [DRIVE])
    c8 = m_constants(m.with_k(10**8), [DRIVE], [DRIVE])
    assert c4.M1 == pytest.approx(0.1138259904653889, rel=1e-12)
    assert c4.M2 == pytest.approx(0.004557118148285142, rel=1e-12)
    # the P + Q/k assembly pushes M1, M2 to k-independent limits
    assert c8.M1 == pytest.approx(c6.M1, rel=1e-9)
    assert c8.M2 == pytest.approx(c6.M2, rel=1e-9)
    # per-interval semigroup error scales as 1/k
    ratio = ae_semigroup_error(c4, 1.0) / ae_semigroup_error(c6, 1.0)
    assert abs(ratio / 100.0 - 1.0) <= 1e-9
    with pytest.raises(InvalidParameterError):
        m_constants(atom_cavity_ae(GAMMA, G_COUP, DRIVE), [DRIVE], [DRIVE])


def test_m_constants_cache_shared_across_k():
    m = atom_cavity_ae(GAMMA, G_COUP, DRIVE, J_max=4)
    m4, m8 = m.with_k(10**4), m.with_k(10**8)
    assert m4._cache is m._cache and m8._cache is m._cache
    c4, c8 = m_constants(m4, [DRIVE], [DRIVE]), m_constants(m8, [DRIVE], [DRIVE])
    assert c4.k == 10**4 and c8.k == 10**8


def test_truncation_level_must_exceed_compositions():
    # J_max = 2 cannot hold the level-3 amplitudes of the composed correction
    shallow = atom_cavity_ae(GAMMA, G_COUP, DRIVE, J_max=2).with_k(10**4)
    with pytest.raises(InsufficientTruncationError):
        m_constants(shallow, [DRIVE], [DRIVE])


def test_variant_error_reductions():
    m = atom_cavity_ae(GAMMA, G_COUP, DRIVE, J_max=4).with_k(10**6)
    c = m_constants(m, [DRIVE], [DRIVE])
    one = lambda t: 1.0
    two = lambda t: 2.0
    assert ae_variant_error(c, 1.0, one, one) == ae_semigroup_error(c, 1.0)
    assert ae_variant_error(c, 0.7, two, two) == pytest.approx(
        (4.0 * c.M1 + 0.7 * c.M2) / c.k, rel=1e-15
    )
    with pytest.raises(InvalidParameterError):
        ae_semigroup_error(c, -0.1)
    with pytest.raises(InvalidParameterError):
        ae_variant_error(c, -0.1, one, one)


def test_ae_interval_sum():
    m = atom_cavity_ae(GAMMA, G_COUP, DRIVE, J_max=4).with_k(10**6)
    c = m_constants(m, [DRIVE], [DRIVE])
    parts = np.array([0.0, 0.25, 1.0])
    manual = ae_semigroup_error(c, 0.25) + ae_semigroup_error(c, 0.75)
    assert ae_interval_sum([c, c], parts) == pytest.approx(manual, rel=1e-14)
    with pytest.raises(PartitionError):
        ae_interval_sum([c], parts)


def test_ae_theorem_bound_assembly():
    m = atom_cavity_ae(GAMMA, G_COUP, DRIVE, J_max=4).with_k(10**6)
    c = m_constants(m, [DRIVE], [DRIVE])
    u0 = np.array([0.0, 1.0], dtype=complex)  # ground |-, 0>
    f = SimpleFunction.constant([DRIVE], 1.0)
    state = ApproxState([(u0, f)])
    rep = ae_theorem_bound(m, (u0, f), state, f)
    assert rep.mismatch == 0.0
    assert rep.k_scaling == pytest.approx(2.0 * rep.z_sum, rel=1e-15)
    assert rep.z_sum == pytest.approx(
        exp_norm(f) * (2.0 * c.M1 + 1.0 * c.M2) / c.k, rel=1e-13
    )
    assert rep.bound == pytest.approx(rep.recombined_bound(), rel=1e-14)
    # without a scaling parameter the certificate is undefined
    with pytest.raises(InvalidParameterError):
        ae_theorem_bound(atom_cavity_ae(GAMMA, G_COUP, DRIVE), (u0, f), state, f)


def test_ae_certificate_table_small_run():
    reports, result = ae_certificate_table((10**4,), n_intervals=6, blocks=2, seed=0)
    assert len(reports) == 1
    assert reports[0].k == 10**4
    assert result is not None and not result.search_failure
    assert result.state.n_terms == 5
    assert result.state.terms[0][1].n_intervals == 6
    assert result.cost < 0.02
    assert 0.0 < reports[0].bound < 0.2
    assert reports[0].k_scaling is not None and reports[0].k_scaling > 0.0
    # reusing the returned approximant skips the search entirely
    again, res2 = ae_certificate_table(
        (10**4,), n_intervals=6, blocks=2, seed=0, state=result.state
    )
    assert res2 is None
    assert again[0].bound == reports[0].bound
