"""Toeplitz assembly against the independent quadrature oracle."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bargspec.bargmann import (
    MonomialSymbol,
    QuadratureError,
    assemble_toeplitz,
    inner_product_oracle,
    monomial_matrix,
    radial_diagonal,
    toeplitz_radial,
)


def test_monomial_zz_diagonal():
    # T(|z|^2) at hbar = 0.1: diag(0.1, ..., 0.5)
    m = monomial_matrix(1, 1, 0.1, 5)
    assert np.allclose(m.entries, np.diag([0.1, 0.2, 0.3, 0.4, 0.5]), atol=1e-15)


def test_monomial_identity():
    m = monomial_matrix(0, 0, 0.37, 6)
    assert np.allclose(m.entries, np.eye(6))


def test_monomial_creation_band():
    # alpha=1, beta=0: M[k+1, k] = sqrt(hbar (k+1))
    m = monomial_matrix(1, 0, 0.25, 4)
    sub = np.diagonal(m.entries, offset=-1)
    assert np.allclose(sub, np.sqrt(0.25 * np.arange(1, 4)))
    assert np.allclose(sub[:2], [0.5, np.sqrt(0.5)])


def test_assemble_linearity_and_trivial():
    m = assemble_toeplitz(MonomialSymbol({(1, 1): 2.0}), 0.1, 3)
    assert np.allclose(m.entries, np.diag([0.2, 0.4, 0.6]))
    zero = assemble_toeplitz(MonomialSymbol({}), 0.1, 3)
    assert np.allclose(zero.entries, 0.0)


def test_assemble_two_band_hermitian_pair():
    hbar, n = 0.2, 6
    m = assemble_toeplitz(MonomialSymbol({(2, 0): 1.0, (0, 2): 1.0}), hbar, n)
    k = np.arange(n - 2)
    vals = np.sqrt(hbar**2 * (k + 1) * (k + 2))
    assert np.allclose(np.diagonal(m.entries, -2), vals)
    assert np.allclose(np.diagonal(m.entries, 2), vals)
    assert np.allclose(np.diagonal(m.entries), 0.0)


def test_radial_profile_examples():
    m = toeplitz_radial([0.0, 1.0], 0.1, 4)
    assert np.allclose(np.diagonal(m.entries), [0.1, 0.2, 0.3, 0.4])
    m2 = toeplitz_radial([0.0, 0.0, 1.0], 1.0, 3)
    assert np.allclose(np.diagonal(m2.entries), [2.0, 6.0, 12.0])
    m3 = toeplitz_radial([], 0.3, 3)
    assert np.allclose(m3.entries, 0.0)


def test_radial_matches_monomial_assembly():
    # assemble({(j,j):1}) equals toeplitz_radial(s^j) for j <= 3
    hbar, n = 0.15, 9
    for j in range(4):
        a = assemble_toeplitz(MonomialSymbol({(j, j): 1.0}), hbar, n)
        b = toeplitz_radial([0.0] * j + [1.0], hbar, n)
        assert np.allclose(a.entries, b.entries, atol=1e-13)


def test_oracle_unit_examples():
    assert inner_product_oracle(MonomialSymbol({(1, 1): 1.0}), 2, 2, 0.1) == pytest.approx(
        0.3, abs=1e-10
    )
    assert inner_product_oracle(MonomialSymbol({(1, 1): 1.0}), 1, 3, 0.1) == pytest.approx(
        0.0, abs=1e-12
    )
    assert inner_product_oracle(MonomialSymbol({(0, 0): 1.0}), 4, 4, 0.2) == pytest.approx(
        1.0, abs=1e-12
    )


def test_oracle_equivalence_sweep():
    # all monomials alpha+beta <= 4, all 0 <= k, l < 12, hbar in {0.05, 0.1, 0.5}
    pairs = [(a, b) for a in range(5) for b in range(5 - a)]
    worst = 0.0
    for hbar in (0.05, 0.1, 0.5):
        for a, b in pairs:
            sym = MonomialSymbol({(a, b): 1.0})
            mat = assemble_toeplitz(sym, hbar, 12).entries
            for k in range(12):
                for l in range(12):
                    got = inner_product_oracle(sym, k, l, hbar)
                    worst = max(worst, abs(got - mat[l, k]))
    assert worst <= 1e-9


def test_oracle_full_band_small():
    # exhaustive check on the band itself for a composite symbol
    sym = MonomialSymbol({(2, 1): 0.7 - 0.2j, (0, 2): 1.1j})
    hbar = 0.1
    mat = assemble_toeplitz(sym, hbar, 8).entries
    for k in range(6):
        for l in range(8):
            assert inner_product_oracle(sym, k, l, hbar) == pytest.approx(
                mat[l, k], abs=1e-10
            )


@settings(max_examples=25, deadline=None)
@given(
    alpha=st.integers(0, 4),
    beta=st.integers(0, 4),
    n=st.integers(2, 30),
)
def test_bandedness(alpha, beta, n):
    m = monomial_matrix(alpha, beta, 0.2, n).entries
    rows, cols = np.nonzero(m)
    assert np.all(rows - cols == alpha - beta)


@settings(max_examples=25, deadline=None)
@given(alpha=st.integers(0, 3), beta=st.integers(0, 3))
def test_adjoint_symmetry(alpha, beta):
    a = monomial_matrix(alpha, beta, 0.3, 12).entries
    b = monomial_matrix(beta, alpha, 0.3, 12).entries
    assert np.allclose(a, b.conj().T, atol=1e-13)


def test_overflow_guard():
    with pytest.raises(OverflowError):
        monomial_matrix(3, 0, 0.1, 20_000_000)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        monomial_matrix(-1, 0, 0.1, 4)
    with pytest.raises(ValueError):
        assemble_toeplitz(MonomialSymbol({(1, 1): 1.0}), 1.5, 4)
    with pytest.raises(ValueError):
        assemble_toeplitz(MonomialSymbol({(1, 1): 1.0}), 0.1, 0)


def test_symbol_json_round_trip():
    sym = MonomialSymbol({(1, 1): 1 + 2j, (3, 0): -0.25})
    back = MonomialSymbol.from_json(sym.to_json())
    assert back.coeffs == sym.coeffs


def test_symbol_recenter_exact():
    sym = MonomialSymbol({(2, 2): 1.0, (2, 0): -1.0, (0, 2): -1.0, (0, 0): 1.0})
    shifted = sym.recenter(1.0)
    rng = np.random.default_rng(1)
    for _ in range(10):
        w = rng.normal() + 1j * rng.normal()
        assert shifted(w) == pytest.approx(sym(1.0 + w), abs=1e-12)


def test_matrix_csv_round_trip():
    m = assemble_toeplitz(MonomialSymbol({(1, 1): 1 + 1j}), 0.1, 4)
    rebuilt = np.zeros((4, 4), dtype=complex)
    for line in m.to_csv().strip().splitlines():
        r, c, re, im = line.split(",")
        rebuilt[int(r), int(c)] = float(re) + 1j * float(im)
    assert np.array_equal(rebuilt, m.entries)


def test_radial_diagonal_formula():
    # D[k] = sum_j g_j hbar^j (k+j)!/k!
    got = radial_diagonal(np.array([1.0, 2.0, 3.0]), 0.5, 4)
    k = np.arange(4)
    expect = 1.0 + 2.0 * 0.5 * (k + 1) + 3.0 * 0.25 * (k + 1) * (k + 2)
    assert np.allclose(got, expect)
