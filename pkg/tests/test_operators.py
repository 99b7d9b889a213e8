"""Ladder operators, tensor index conventions, and the matexp wrapper."""

import numpy as np
import pytest

from qsdecert import (
    InvalidDimensionError,
    InvalidIndexError,
    NumericError,
    adjoint,
    annihilation,
    basis_state,
    creation,
    flatten_index,
    matexp,
    number,
    opnorm,
    projector,
    tensor,
)


def test_annihilation_entries():
    a = annihilation(6)
    for n in range(1, 6):
        assert a[n - 1, n] == np.sqrt(n)
    # everything off the first superdiagonal is exactly zero
    mask = np.ones(a.shape, dtype=bool)
    mask[np.arange(5), np.arange(1, 6)] = False
    assert np.all(a[mask] == 0.0)


def test_annihilation_rejects_bad_dim():
    with pytest.raises(InvalidDimensionError):
        annihilation(0)


def test_creation_is_adjoint():
    a = annihilation(7)
    assert np.array_equal(creation(7), a.conj().T)
    rng = np.random.default_rng(5)
    x = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    assert np.array_equal(adjoint(x), x.conj().T)


def test_truncated_commutator():
    # [a, a*] = I except the top corner, where the cutoff leaves -(d-1)
    d = 9
    a, c = annihilation(d), creation(d)
    comm = a @ c - c @ a
    expected = np.eye(d)
    expected[-1, -1] = -(d - 1)
    np.testing.assert_allclose(comm, expected, atol=1e-12)


def test_number_operator_diagonal():
    np.testing.assert_allclose(number(8), np.diag(np.arange(8).astype(complex)), atol=1e-12)


def test_opnorm_of_annihilation():
    # top singular value of a on a (k+1)-level space is sqrt(k)
    for k in (1, 4, 30):
        assert opnorm(annihilation(k + 1)) == pytest.approx(np.sqrt(k), rel=1e-12)
    assert opnorm(np.zeros((0, 0))) == 0.0


def test_tensor_index_convention():
    rng = np.random.default_rng(11)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    b = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    t = tensor(a, b)
    expected = np.zeros((12, 12), dtype=complex)
    for i in range(3):
        for n in range(4):
            for j in range(3):
                for m in range(4):
                    expected[flatten_index(i, n, 4), flatten_index(j, m, 4)] = a[i, j] * b[n, m]
    np.testing.assert_allclose(t, expected, rtol=1e-14, atol=0.0)


def test_projector_selects_indices():
    p = projector(5, [0, 3])
    np.testing.assert_array_equal(np.diag(p), np.array([1, 0, 0, 1, 0], dtype=complex))
    np.testing.assert_allclose(p @ p, p, atol=0.0)
    with pytest.raises(InvalidIndexError):
        projector(5, [5])
    with pytest.raises(InvalidDimensionError):
        projector(0, [])


def test_basis_state():
    e = basis_state(4, 2)
    np.testing.assert_array_equal(e, np.array([0, 0, 1, 0], dtype=complex))
    with pytest.raises(InvalidIndexError):
        basis_state(4, 4)
    with pytest.raises(InvalidIndexError):
        basis_state(4, -1)


def test_matexp_matches_power_series():
    rng = np.random.default_rng(202)
    x = 0.3 * (rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6)))
    series = np.eye(6, dtype=complex)
    term = np.eye(6, dtype=complex)
    for j in range(1, 40):
        term = term @ x / j
        series = series + term
    np.testing.assert_allclose(matexp(x), series, atol=1e-12)
    # the optional time argument scales the exponent
    np.testing.assert_allclose(matexp(x, 2.0), matexp(2.0 * x), atol=1e-12)


def test_matexp_rejects_nonfinite():
    bad = np.zeros((2, 2))
    bad[0, 1] = np.nan
    with pytest.raises(NumericError):
        matexp(bad)
    with pytest.raises(NumericError):
        matexp(np.eye(2), np.inf)
