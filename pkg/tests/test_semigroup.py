"""Piecewise-constant amplitudes and the displaced contraction semigroups."""

import numpy as np
import pytest
import scipy.linalg as sla

from qsdecert import (
    Generator,
    InvalidAmplitudeError,
    ModelIntegrityError,
    PartitionError,
    SimpleFunction,
    chain,
    generator,
    kerr_cavity,
    opnorm,
    propagate,
    refine_common,
)

MODEL = kerr_cavity(25.0, 50.0, -50.0 / 60.0, 2)


def test_simple_function_validation():
    with pytest.raises(InvalidAmplitudeError):
        SimpleFunction(np.array([0.5, 1.0]), np.array([[0.1]]))  # must start at 0
    with pytest.raises(InvalidAmplitudeError):
        SimpleFunction(np.array([0.0, 1.0, 1.0]), np.array([[0.1], [0.2]]))
    with pytest.raises(InvalidAmplitudeError):
        SimpleFunction(np.array([0.0, 1.0]), np.array([[0.1], [0.2]]))  # row count
    with pytest.raises(InvalidAmplitudeError):
        SimpleFunction(np.array([0.0, 1.0]), np.array([[np.inf]]))
    with pytest.raises(InvalidAmplitudeError):
        SimpleFunction(np.array([0.0]), np.array([[0.1]]).reshape(1, 1)[:0])


def test_simple_function_evaluation():
    f = SimpleFunction(np.array([0.0, 0.5, 2.0]), np.array([[0.1 + 0.2j], [-0.3]]))
    assert f.m == 1
    assert f.n_intervals == 2
    assert f.t_final == 2.0
    assert f.value_at(0.0)[0] == 0.1 + 0.2j
    assert f.value_at(0.49)[0] == 0.1 + 0.2j
    assert f.value_at(0.5)[0] == -0.3
    np.testing.assert_allclose(f.durations(), [0.5, 1.5])
    # integral of |f|^2: 0.5*0.05 + 1.5*0.09
    assert f.norm_sq() == pytest.approx(0.5 * 0.05 + 1.5 * 0.09, rel=1e-14)
    with pytest.raises(InvalidAmplitudeError):
        f.value_at(2.0)
    with pytest.raises(InvalidAmplitudeError):
        f.value_at(-0.01)


def test_simple_function_inner_product():
    f = SimpleFunction(np.array([0.0, 1.0, 2.0]), np.array([[0.1], [0.2j]]))
    g = SimpleFunction(np.array([0.0, 1.0, 2.0]), np.array([[0.3], [0.1]]))
    assert f.inner(g) == pytest.approx(0.03 - 0.02j, abs=1e-15)
    # mismatched partitions are refined internally
    h = SimpleFunction(np.array([0.0, 2.0]), np.array([[0.3]]))
    assert f.inner(h) == pytest.approx(0.03 + np.conj(0.2j) * 0.3, abs=1e-15)


def test_constant_and_zero_builders():
    c = SimpleFunction.constant([0.1, -0.2j], 3.0)
    assert c.m == 2
    np.testing.assert_array_equal(c.value_at(1.7), [0.1, -0.2j])
    z = SimpleFunction.zero(1, 3.0)
    assert z.norm_sq() == 0.0


def test_with_breakpoints_preserves_values():
    f = SimpleFunction(np.array([0.0, 1.0, 2.0]), np.array([[1.0], [2.0]]))
    g = f.with_breakpoints(np.array([0.0, 0.5, 1.0, 1.5, 2.0]))
    np.testing.assert_array_equal(g.values.ravel(), [1.0, 1.0, 2.0, 2.0])
    assert g.norm_sq() == pytest.approx(f.norm_sq(), rel=1e-14)


def test_equality_and_hash():
    f = SimpleFunction(np.array([0.0, 1.0]), np.array([[0.1]]))
    g = SimpleFunction(np.array([0.0, 1.0]), np.array([[0.1]]))
    h = SimpleFunction(np.array([0.0, 1.0]), np.array([[0.2]]))
    assert f == g and hash(f) == hash(g)
    assert f != h


def test_refine_common():
    f = SimpleFunction(np.array([0.0, 1.0, 2.0]), np.array([[1.0], [2.0]]))
    g = SimpleFunction(np.array([0.0, 0.5, 2.0]), np.array([[5.0], [6.0]]))
    f2, g2 = refine_common(f, g)
    np.testing.assert_allclose(f2.breakpoints, [0.0, 0.5, 1.0, 2.0])
    np.testing.assert_allclose(g2.breakpoints, [0.0, 0.5, 1.0, 2.0])
    for t in (0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 1.99):
        np.testing.assert_array_equal(f2.value_at(t), f.value_at(t))
        np.testing.assert_array_equal(g2.value_at(t), g.value_at(t))
    with pytest.raises(PartitionError):
        refine_common(f, SimpleFunction(np.array([0.0, 3.0]), np.array([[1.0]])))


def test_generator_small_kerr_diagonal():
    m = kerr_cavity(25.0, 50.0, -50.0 / 60.0, 1)
    g = generator(m, [0.0], [0.0])
    # undriven: G = iH - L*L/2, diagonal with entries 0 and 50j - 12.5
    np.testing.assert_allclose(
        g.matrix, np.diag([0.0, 50.0j - 12.5]), atol=1e-12
    )


def test_generator_matches_dense_assembly():
    # two-channel model with a generic block scattering matrix
    rng = np.random.default_rng(77)
    dim = 4
    theta = 0.7
    u2 = np.array(
        [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]],
        dtype=complex,
    )
    v = [np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))[0]
         for _ in range(2)]
    S = tuple(tuple(u2[j, i] * v[i] for i in range(2)) for j in range(2))
    L = tuple(0.4 * (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
              for _ in range(2))
    h = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    H = 0.5 * (h + h.conj().T)
    from qsdecert import SlhModel

    model = SlhModel("dense-check", S, L, H)
    alpha = np.array([0.2 - 0.1j, 0.05j])
    beta = np.array([-0.1, 0.3 + 0.2j])
    expected = 1j * H.astype(complex)
    for j in range(2):
        expected += beta[j] * L[j].conj().T
        expected -= 0.5 * (L[j].conj().T @ L[j])
        for i in range(2):
            sd = S[j][i].conj().T
            expected += np.conj(alpha[i]) * beta[j] * sd
            expected -= np.conj(alpha[i]) * (sd @ L[j])
    expected -= 0.5 * (np.vdot(alpha, alpha).real + np.vdot(beta, beta).real) * np.eye(dim)
    got = generator(model, alpha, beta).matrix
    np.testing.assert_allclose(got, expected, atol=1e-13)


def test_generator_validation_and_cache():
    with pytest.raises(InvalidAmplitudeError):
        generator(MODEL, [0.1, 0.2], [0.1])
    g1 = generator(MODEL, [0.1], [0.2])
    g2 = generator(MODEL, [0.1], [0.2])
    assert g1 is g2  # cached per amplitude pair
    assert not g1.matrix.flags.writeable


def test_propagate_contraction_and_cache():
    g = generator(MODEL, [0.1], [0.3j])
    u = propagate(g, 0.8)
    assert opnorm(u) <= 1.0 + 1e-9
    assert propagate(g, 0.8) is u
    with pytest.raises(InvalidAmplitudeError):
        propagate(g, -0.1)
    assert g.numerical_abscissa() <= 1e-12


def test_propagate_rejects_expansive_generator():
    g = generator(MODEL, [0.0], [0.0])
    bad_matrix = g.matrix.copy()
    for li in MODEL.L:
        bad_matrix += li.conj().T @ li  # flips the dissipator sign
    bad = Generator(matrix=bad_matrix, k=None, alpha=g.alpha, beta=g.beta)
    with pytest.raises(ModelIntegrityError):
        propagate(bad, 1.0)


def test_semigroup_law():
    g = generator(MODEL, [0.1], [0.2 - 0.1j])
    left = propagate(g, 0.7)
    right = propagate(g, 0.3) @ propagate(g, 0.4)
    np.testing.assert_allclose(left, right, atol=1e-9)


def test_chain_applies_last_interval_first():
    bps = np.array([0.0, 0.4, 1.0])
    f = SimpleFunction(bps, np.array([[0.1 + 0.0j], [0.2 + 0.0j]]))
    g = SimpleFunction(bps, np.array([[0.05 + 0.0j], [-0.1 + 0.0j]]))
    u = np.array([1.0, 0.0, 0.0], dtype=complex)
    g0 = generator(MODEL, f.values[0], g.values[0]).matrix
    g1 = generator(MODEL, f.values[1], g.values[1]).matrix
    expected = sla.expm(0.4 * g0) @ sla.expm(0.6 * g1) @ u
    np.testing.assert_allclose(chain(MODEL, f, g, u), expected, atol=1e-12)
    with pytest.raises(InvalidAmplitudeError):
        chain(MODEL, SimpleFunction.constant([0.1, 0.2], 1.0), g, u)


def test_chain_fixes_vacuum_when_undriven():
    f = SimpleFunction.zero(1, 2.0)
    u = np.array([1.0, 0.0, 0.0], dtype=complex)
    out = chain(MODEL, f, f, u)
    np.testing.assert_allclose(out, u, atol=1e-13)
