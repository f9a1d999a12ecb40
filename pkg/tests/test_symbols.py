"""Truncated analytic-symbol arithmetic: sharp products, formal norms,
theta calculus, cohomology, inverses, Moser, oscillator functions, and the
degree-by-degree normal forms."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bargspec.bargmann import MonomialSymbol, assemble_toeplitz
from bargspec.symbols import (
    DegreeOverflow,
    FormalSymbol,
    NonzeroAverage,
    TaylorTable2D,
    birkhoff_normal_form,
    cohomology_solve,
    divide_by_radial,
    formal_norm,
    lie_transport,
    moser_normal_form,
    oscillator_function_from_symbol,
    oscillator_function_symbol,
    oscillator_sharp_powers,
    poisson_bracket,
    pullback_linear,
    quantum_normal_form,
    radial_average,
    radial_table,
    radial_toeplitz_eigenvalues,
    sharp_bracket,
    sharp_bracket_tail,
    sharp_inverse,
    sharp_product,
    table_from_dict,
    theta_antiderivative,
    theta_derivative,
)


def rand_table(rng, degree, pad=None):
    pad = degree if pad is None else pad
    t = np.zeros((pad + 1, pad + 1), dtype=complex)
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            t[a, b] = rng.normal() + 1j * rng.normal()
    return TaylorTable2D(t)


def rand_symbol(rng, order, degree, pad=None):
    return FormalSymbol([rand_table(rng, degree, pad) for _ in range(order + 1)])


ZZ = FormalSymbol([radial_table(np.array([0.0, 1.0]), 8)])


class TestSharpProduct:
    def test_oscillator_square(self):
        p = sharp_product(ZZ, ZZ, 2, 8)
        assert p.term(0).t[2, 2] == pytest.approx(1.0)
        assert p.term(1).t[1, 1] == pytest.approx(-1.0)
        assert p.term(1).norm_inf() == pytest.approx(1.0)
        assert p.term(2).norm_inf() == 0.0

    def test_right_identity(self):
        rng = np.random.default_rng(0)
        f = rand_symbol(rng, 2, 5)
        one = FormalSymbol.constant(1.0, 2, 5)
        assert (sharp_product(f, one) - f).norm_inf() < 1e-15

    def test_ordering_sensitivity(self):
        z = FormalSymbol([table_from_dict({(1, 0): 1}, 2)])
        zb = FormalSymbol([table_from_dict({(0, 1): 1}, 2)])
        assert sharp_product(z, zb, 1).term(1).t[0, 0] == pytest.approx(-1.0)
        assert sharp_product(zb, z, 1).term(1).norm_inf() == 0.0

    def test_associativity_within_budget(self):
        rng = np.random.default_rng(1)
        order, deg, pad = 3, 3, 12
        f, g, h = (rand_symbol(rng, 1, deg, pad) for _ in range(3))
        lhs = sharp_product(sharp_product(f, g, order, pad), h, order, pad)
        rhs = sharp_product(f, sharp_product(g, h, order, pad), order, pad)
        assert (lhs - rhs).norm_inf() < 1e-12

    def test_truncation_flag(self):
        f = FormalSymbol([table_from_dict({(2, 0): 1.0}, 2)])
        g = FormalSymbol([table_from_dict({(0, 2): 1.0}, 2)])
        p = sharp_product(f, g, 1, 2)  # true product has degree 4
        assert p.truncated


class TestFormalNorm:
    def test_constant(self):
        assert formal_norm(FormalSymbol.constant(1.0, 0, 2), 0.5).per_order[0] == 2.0

    def test_z(self):
        z = FormalSymbol([table_from_dict({(1, 0): 1}, 2)])
        rep = formal_norm(z, 0.3)
        assert rep.per_order[1] == pytest.approx(2 * 0.3)

    def test_zero(self):
        zero = FormalSymbol.constant(0.0, 1, 3)
        assert formal_norm(zero, 0.2).total() == 0.0

    def test_cumulative_monotone(self):
        rng = np.random.default_rng(2)
        rep = formal_norm(rand_symbol(rng, 2, 4), 0.3)
        assert np.all(np.diff(rep.cumulative) >= 0)

    def test_submultiplicative_and_lower_bound(self):
        rng = np.random.default_rng(3)
        for _ in range(40):
            deg = int(rng.integers(1, 5))
            f0, g0 = rand_table(rng, deg, 2 * deg), rand_table(rng, deg, 2 * deg)
            f = FormalSymbol([f0])
            g = FormalSymbol([g0])
            rho = float(rng.choice([0.1, 0.3]))
            smax = 4 * deg + 4
            fg = sharp_product(f, g, 2, 2 * deg)
            nf = formal_norm(f, rho, smax).cumulative
            ng = formal_norm(g, rho, smax).cumulative
            nfg = formal_norm(fg, rho, smax).cumulative
            assert np.all(nfg <= nf * ng * (1 + 1e-12) + 1e-12)
            # pointwise product of hbar-independent symbols is dominated by #
            pw = FormalSymbol([_product(f0, g0)])
            npw = formal_norm(pw, rho, smax).cumulative
            assert np.all(npw <= nfg * (1 + 1e-12) + 1e-12)

    def test_bracket_bound(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            deg = int(rng.integers(1, 5))
            f = rand_symbol(rng, int(rng.integers(0, 3)), deg, 2 * deg)
            g = rand_symbol(rng, int(rng.integers(0, 3)), deg, 2 * deg)
            rho = 0.2
            smax = 2 * (f.order + g.order) + 4 * deg
            tail = sharp_bracket_tail(f, g, 2, f.order + g.order + 2, 2 * deg)
            nt = formal_norm(tail, rho, smax).cumulative
            nf = formal_norm(f, rho, smax).cumulative
            ng = formal_norm(g, rho, smax).cumulative
            sf = np.concatenate([[0.0, 0.0], nf[:-2]])
            sg = np.concatenate([[0.0, 0.0], ng[:-2]])
            assert np.all(nt <= 2 * sf * sg * (1 + 1e-12) + 1e-12)

    def test_bracket_tail_is_bracket_minus_poisson(self):
        rng = np.random.default_rng(5)
        f = rand_symbol(rng, 1, 3, 8)
        g = rand_symbol(rng, 1, 3, 8)
        order = 4
        tail = sharp_bracket_tail(f, g, 2, order, 8)
        br = sharp_bracket(f, g, order, 8)
        pois = FormalSymbol.constant(0.0, order, 8)
        for k in range(f.order + 1):
            for l in range(g.order + 1):
                if k + l + 1 > order:
                    continue
                term = 1j * poisson_bracket(f.term(k), g.term(l)).resized(8)
                pois.terms[k + l + 1] = pois.terms[k + l + 1] + (-1.0) * term
        # [f,g]_# + i hbar {f,g} = j>=2 tail   (with the eq_Poisson sign)
        assert (br - pois - tail).norm_inf() < 1e-12


def _product(a, b):
    from bargspec.symbols import table_product

    return table_product(a, b, a.degree)


class TestThetaCalculus:
    def test_poisson_examples(self):
        zz = table_from_dict({(1, 1): 1}, 4)
        z = table_from_dict({(1, 0): 1}, 4)
        zb = table_from_dict({(0, 1): 1}, 4)
        assert poisson_bracket(zz, z).t[1, 0] == pytest.approx(1j)
        assert poisson_bracket(z, z).norm_inf() == 0.0
        assert poisson_bracket(z, zb).t[0, 0] == pytest.approx(-1j)

    def test_poisson_antisymmetric_bilinear(self):
        rng = np.random.default_rng(6)
        f, g = rand_table(rng, 4, 6), rand_table(rng, 4, 6)
        assert (poisson_bracket(f, g) + poisson_bracket(g, f)).norm_inf() < 1e-14

    def test_theta_antiderivative_examples(self):
        z = table_from_dict({(1, 0): 1}, 3)
        g = theta_antiderivative(z)
        assert g.t[1, 0] == pytest.approx(-1j)
        assert (theta_derivative(g) - z).norm_inf() == 0.0
        zzb = table_from_dict({(2, 1): 1}, 3)
        assert theta_antiderivative(zzb).t[2, 1] == pytest.approx(-1j)
        with pytest.raises(NonzeroAverage):
            theta_antiderivative(table_from_dict({(1, 1): 1}, 3))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000))
    def test_round_trip_random(self, seed):
        rng = np.random.default_rng(seed)
        t = rand_table(rng, 5).t
        np.fill_diagonal(t, 0.0)
        f = TaylorTable2D(t)
        g = theta_antiderivative(f)
        assert (theta_derivative(g) - f).norm_inf() < 1e-14
        # averaging contraction at every s
        for rho in (0.1, 0.3):
            nf = formal_norm(FormalSymbol([f]), rho).per_order
            ng = formal_norm(FormalSymbol([g]), rho).per_order
            assert np.all(ng <= nf * (1 + 1e-12) + 1e-15)

    def test_radial_average(self):
        f = table_from_dict({(1, 1): 1.0, (1, 0): 1.0}, 4)
        prof = radial_average(f)
        assert prof[1] == 1.0 and prof[0] == 0.0
        assert np.all(radial_average(table_from_dict({(1, 3): 1.0}, 4)) == 0.0)
        assert radial_average(table_from_dict({(2, 2): 1.0}, 4))[2] == 1.0


class TestCohomology:
    def test_simple(self):
        b, r = cohomology_solve(table_from_dict({(1, 2): 1}, 6))
        assert np.abs(r).max() == 0.0
        assert b.t[1, 2] == pytest.approx(1j)
        assert np.abs(np.diagonal(b.t)).max() == 0.0

    def test_radial_input(self):
        g = table_from_dict({(2, 2): 0.7}, 6)
        b, r = cohomology_solve(g)
        assert b.norm_inf() == 0.0
        assert r[2] == pytest.approx(0.7)

    def test_series_division(self):
        b, r = cohomology_solve(table_from_dict({(1, 0): 1}, 7), np.array([1.0, 1.0]))
        assert b.t[1, 0] == pytest.approx(-1j)
        assert b.t[2, 1] == pytest.approx(1j)
        assert b.t[3, 2] == pytest.approx(-1j)

    def test_defining_equation(self):
        rng = np.random.default_rng(7)
        g = rand_table(rng, 6, 10)
        mu_prime = np.array([1.0, 0.4 - 0.1j, 0.2])
        b, r = cohomology_solve(g, mu_prime)
        lhs = _product(radial_table(mu_prime, 10), theta_derivative(b))
        rhs = g.resized(10) - radial_table(r, 10)
        assert (lhs - rhs).norm_inf() < 1e-12


class TestSharpInverse:
    def test_zero(self):
        a = FormalSymbol.constant(0.0, 3, 4)
        assert sharp_inverse(a).norm_inf() == 0.0

    def test_scalar_geometric(self):
        c = 0.3 - 0.2j
        a = FormalSymbol.constant(c, 0, 2).shift_up(1).resized(4, 2)
        star = sharp_inverse(a)
        for k in range(1, 5):
            assert star.term(k).t[0, 0] == pytest.approx((-c) ** k)

    def test_defining_identity_random(self):
        rng = np.random.default_rng(8)
        for _ in range(10):
            a = rand_symbol(rng, 2, 3, 9).shift_up(1).resized(3, 9)
            star = sharp_inverse(a)
            one = FormalSymbol.constant(1.0, 3, 9)
            res = sharp_product(one + a, one + star, 3, 9) - one
            assert res.norm_inf() < 1e-12

    def test_requires_order_one(self):
        with pytest.raises(ValueError):
            sharp_inverse(FormalSymbol.constant(1.0, 2, 2))


class TestMoser:
    MU = FormalSymbol([radial_table(np.array([0.0, 1.0]), 10)])

    def test_constant_commutes(self):
        g = FormalSymbol.constant(0.5 + 0.25j, 0, 10)
        res = moser_normal_form(self.MU, g, 3, 10)
        assert res.a_final.norm_inf() == 0.0
        assert res.r_final[0][0] == pytest.approx(0.5 + 0.25j)

    def test_radial_commutes(self):
        g = FormalSymbol([radial_table(np.array([0.0, 0.0, 1.0]), 10)])
        res = moser_normal_form(self.MU, g, 3, 10)
        assert res.a_final.norm_inf() == 0.0
        assert res.r_final[0][2] == pytest.approx(1.0)

    def test_linear_g(self):
        g = FormalSymbol([table_from_dict({(1, 0): 1}, 10)])
        res = moser_normal_form(self.MU, g, 3, 10)
        assert max(np.abs(r).max() for r in res.r_final) < 1e-14
        assert res.a_final.term(1).t[1, 0] == pytest.approx(-1.0)

    def test_identity_random_with_nontrivial_mu(self):
        rng = np.random.default_rng(9)
        deg = 10
        mu = FormalSymbol([radial_table(np.array([0.0, 1.0, 0.15 - 0.05j]), deg)])
        one = FormalSymbol.constant(1.0, 3, deg)
        for _ in range(3):
            g = rand_symbol(rng, 0, 4, deg)
            res = moser_normal_form(mu, g, 3, deg)
            for tau in (0.4, 1.0):
                a_t = res.a_at(tau)
                lhs = sharp_product(
                    mu.resized(3, deg) + tau * g.shift_up(2).resized(3, deg), one + a_t, 3, deg
                )
                rhs = sharp_product(
                    one + a_t,
                    mu.resized(3, deg) + res.r_symbol(tau).shift_up(2).resized(3, deg),
                    3,
                    deg,
                )
                assert (lhs - rhs).norm_inf() < 1e-10

    def test_rejects_bad_mu(self):
        with pytest.raises(ValueError):
            moser_normal_form(
                FormalSymbol([radial_table(np.array([0.0, 2.0]), 4)]),
                FormalSymbol.constant(1.0, 0, 4),
                2,
                4,
            )

    def test_t_degree_overflow(self):
        g = FormalSymbol([table_from_dict({(1, 0): 1, (2, 0): 0.3}, 8)])
        with pytest.raises(DegreeOverflow):
            moser_normal_form(self.MU.resized(0, 8), g, 3, 8, t_degree=1)


class TestOscillatorFunctions:
    def test_sharp_powers(self):
        powers = oscillator_sharp_powers(2, 2, 6)
        assert powers[1].term(0).t[1, 1] == pytest.approx(1.0)
        assert powers[2].term(0).t[2, 2] == pytest.approx(1.0)
        assert powers[2].term(1).t[1, 1] == pytest.approx(-1.0)

    def test_identity_function(self):
        mb = oscillator_function_symbol([np.array([0.0, 1.0])], 2, 6)
        assert mb.term(0).t[1, 1] == pytest.approx(1.0)
        assert mb.term(1).norm_inf() == 0.0

    def test_square_function_spectral(self):
        # mu(s) = s^2 -> mu_b = |z|^4 - hbar |z|^2, diagonal hbar^2 (l+1)^2
        mb = oscillator_function_symbol([np.array([0.0, 0.0, 1.0])], 2, 6)
        assert mb.term(0).t[2, 2] == pytest.approx(1.0)
        assert mb.term(1).t[1, 1] == pytest.approx(-1.0)
        profiles = [radial_average(mb.term(k)) for k in range(mb.order + 1)]
        hbar = 0.2
        diag = radial_toeplitz_eigenvalues(profiles, hbar, 8)
        assert np.allclose(diag, (hbar * (np.arange(8) + 1)) ** 2, atol=1e-12)

    def test_cube_function_spectral(self):
        mb = oscillator_function_symbol([np.array([0.0, 0.0, 0.0, 1.0])], 3, 8)
        profiles = [radial_average(mb.term(k)) for k in range(mb.order + 1)]
        hbar = 0.15
        diag = radial_toeplitz_eigenvalues(profiles, hbar, 6)
        assert np.allclose(diag, (hbar * (np.arange(6) + 1)) ** 3, atol=1e-12)

    def test_round_trip(self):
        rng = np.random.default_rng(10)
        mu = [np.array([0.3, 1.0, -0.2]), np.array([0.1, 0.05])]
        mb = oscillator_function_symbol(mu, 3, 8)
        back = oscillator_function_from_symbol(mb)
        for orig, rec in zip(mu, back):
            assert np.allclose(rec[: len(orig)], orig, atol=1e-13)
            assert np.abs(rec[len(orig) :]).max(initial=0.0) < 1e-13


class TestBirkhoff:
    def test_harmonic_trivial(self):
        br = birkhoff_normal_form(table_from_dict({(1, 1): 1.0}, 8))
        assert np.allclose(br.mu0[:2], [0.0, 1.0])
        assert np.abs(br.mu0[2:]).max() < 1e-14
        assert all(g.norm_inf() == 0.0 for g in br.generators)

    def test_quartic_already_radial(self):
        br = birkhoff_normal_form(table_from_dict({(1, 1): 1.0, (2, 2): 1.0}, 8))
        assert br.mu0[1] == pytest.approx(1.0)
        assert br.mu0[2] == pytest.approx(1.0)

    def test_cubic_needs_generator(self):
        br = birkhoff_normal_form(table_from_dict({(1, 1): 1.0, (3, 0): 1.0, (0, 3): 1.0}, 8))
        assert br.generators[0].norm_inf() > 0
        # residual oracle: transport f through the generator chain
        tab = table_from_dict({(1, 1): 1.0, (3, 0): 1.0, (0, 3): 1.0}, 8)
        cur = pullback_linear(tab, np.linalg.inv(br.linear_map), 8)
        for gen in br.generators:
            cur = lie_transport(cur, gen, 8)
        off = cur.t.copy()
        np.fill_diagonal(off, 0.0)
        assert np.abs(off).max() < 1e-10
        assert np.allclose(np.diagonal(cur.t)[:3], [0.0, 1.0, -3.0], atol=1e-12)

    def test_matches_spectrum_at_small_hbar(self):
        # mu0-based prediction vs dense eigensolve for a mildly anharmonic well
        sym = MonomialSymbol({(1, 1): 1.0, (2, 2): 0.08, (3, 0): 0.05, (0, 3): 0.05})
        tab = table_from_dict(sym.coeffs, 10)
        br = birkhoff_normal_form(tab)
        hbar = 0.01
        m = assemble_toeplitz(sym, hbar, 500)
        ev = np.linalg.eigvals(m.entries)
        ev = ev[np.argsort(np.abs(ev))][:3]
        for l in range(3):
            s = hbar * br.d0 * (l + 0.5) + hbar * (1.0) / 2.0  # tr H = 1 here
            pred = np.polynomial.polynomial.polyval(s, br.mu0)
            # leading-order prediction: O(hbar^2) error
            assert abs(pred - ev[l]) < 5e-4

    def test_rejects_nonelliptic(self):
        from bargspec.symbols import NonEllipticHessian

        with pytest.raises(NonEllipticHessian):
            birkhoff_normal_form(table_from_dict({(2, 0): 1.0, (0, 2): 1.0}, 6))


class TestQuantumNormalForm:
    def test_matches_eigensolver(self):
        sym = MonomialSymbol({(1, 1): 1.0, (2, 1): 0.2, (1, 2): 0.2, (2, 2): 0.1})
        f = FormalSymbol.from_monomials(sym, 12)
        profiles, gens = quantum_normal_form(f, 3, 12)
        hbar = 0.02
        pred = radial_toeplitz_eigenvalues(profiles, hbar, 3)
        m = assemble_toeplitz(sym, hbar, 400)
        ev = np.linalg.eigvals(m.entries)
        for p in pred:
            assert np.min(np.abs(ev - p)) < 1e-7

    def test_radial_input_is_fixed_point(self):
        f = FormalSymbol([radial_table(np.array([0.0, 1.0, 0.3]), 8)])
        profiles, gens = quantum_normal_form(f, 2, 8)
        assert not gens
        assert np.allclose(profiles[0][:3], [0.0, 1.0, 0.3])


class TestSerialization:
    def test_formal_symbol_json(self):
        rng = np.random.default_rng(11)
        f = rand_symbol(rng, 2, 3)
        back = FormalSymbol.from_json(f.to_json())
        assert (back - f).norm_inf() < 1e-16

    def test_pullback_linear_exact(self):
        rng = np.random.default_rng(12)
        tab = rand_table(rng, 4, 8)
        m = np.array([[1.1, 0.2 - 0.1j], [0.05j, 0.9]])
        moved = pullback_linear(tab, m, 8)
        for _ in range(10):
            z, v = rng.normal(size=2) + 1j * rng.normal(size=2)
            zz, vv = m @ np.array([z, v])
            assert moved(z, v) == pytest.approx(tab(zz, vv), rel=1e-11, abs=1e-11)
