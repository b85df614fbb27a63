import math

import numpy as np
import pytest

import whitneylab as w
from whitneylab.errors import PreconditionError


def poly1d(fn):
    return w.CallbackFunction(lambda X: fn(X[:, 0]), 1)


class TestFiniteDifference:
    def test_second_difference_of_quadratic(self):
        f = poly1d(lambda t: t ** 2)
        assert w.finite_difference(f, np.array([0.0]), np.array([1.0]), 2) \
            == pytest.approx(2.0)

    def test_linear_annihilated(self):
        f = poly1d(lambda t: 3 * t - 1)
        assert w.finite_difference(f, np.array([0.3]), np.array([0.17]), 2) \
            == pytest.approx(0.0, abs=1e-12)

    def test_cubic_direct_summation_oracle(self):
        f = poly1d(lambda t: t ** 3)
        x, h, r = 0.0, 0.5, 3
        oracle = sum((-1) ** (r + j) * math.comb(r, j) * (x + j * h) ** 3
                     for j in range(r + 1))
        assert oracle == pytest.approx(6 * h ** 3)
        got = w.finite_difference(f, np.array([x]), np.array([h]), r)
        assert got == pytest.approx(oracle, rel=1e-12)

    def test_composition(self):
        f = poly1d(lambda t: np.sin(3 * t))
        x = np.array([[0.2], [0.5]])
        h = np.array([0.11])
        lhs = w.finite_difference(f, x, h, 3)
        inner = w.CallbackFunction(
            lambda X: w.finite_difference(f, X, h, 1), 1)
        rhs = w.finite_difference(inner, x, h, 2)
        assert np.allclose(lhs, rhs, rtol=1e-12)

    def test_zero_step_errors(self):
        with pytest.raises(PreconditionError):
            w.finite_difference(poly1d(np.abs), np.array([0.0]), np.array([0.0]), 1)


class TestShiftDomain:
    def test_interval_r1(self):
        seg = w.box([0.0], [1.0])
        plan = w.grid_plan(seg, 101)
        idx = w.shift_domain(seg, plan, np.array([0.6]), 1)
        assert np.all(plan.points[idx, 0] <= 0.4 + 1e-9)
        assert len(idx) > 0

    def test_interval_r2_empty(self):
        seg = w.box([0.0], [1.0])
        plan = w.grid_plan(seg, 101)
        assert len(w.shift_domain(seg, plan, np.array([0.6]), 2)) == 0

    def test_disk_lens_matches_direct_membership(self):
        disk = w.ball([0, 0], 1.0)
        plan = w.sample_plan(disk, 4096, seed=2)
        h = np.array([0.5, 0.0])
        idx = w.shift_domain(disk, plan, h, 2)
        # oracle: direct membership of the full stencil
        direct = np.array([
            disk.contains(p) and disk.contains(p + h) and disk.contains(p + 2 * h)
            for p in plan.points
        ])
        got = np.zeros(len(plan), dtype=bool)
        got[idx] = True
        assert np.array_equal(got, direct)


class TestLpNorm:
    def test_single_value(self):
        for p in (0.5, 1, 2, math.inf):
            assert w.lp_norm([3.0], [1.0], p) == pytest.approx(3.0)

    def test_pair(self):
        assert w.lp_norm([1, 1], [1, 1], 1) == pytest.approx(2.0)
        assert w.lp_norm([1, 1], [1, 1], math.inf) == pytest.approx(1.0)

    def test_quasi_norm_formula(self):
        oracle = (1 + math.sqrt(2) + math.sqrt(3)) ** 2
        assert w.lp_norm([1, 2, 3], [1, 1, 1], 0.5) == pytest.approx(oracle, rel=1e-12)

    def test_empty_is_zero(self):
        assert w.lp_norm([], [], 2) == 0.0

    def test_invalid_p(self):
        with pytest.raises(PreconditionError):
            w.lp_norm([1.0], [1.0], 0.0)


class TestRidgeLog:
    def test_conventions(self):
        f = w.RidgeLog(3, [0, 1])
        assert f(np.array([0.0, 0.0])) == pytest.approx(-3.0)
        assert f(np.array([0.5, math.exp(-4)])) == pytest.approx(-3.0)
        assert f(np.array([0.0, 0.5])) == pytest.approx(math.log(0.5))


class TestDirectionalModulus:
    def test_linear_r1(self):
        seg = w.box([0.0], [1.0])
        plan = w.grid_plan(seg, 257)
        res = w.directional_modulus(poly1d(lambda t: t), seg, plan,
                                    np.array([1.0]), 1, 1.0, math.inf)
        assert res.value == pytest.approx(1.0, abs=1e-9)

    def test_quadratic_r1_brute_force_oracle(self):
        seg = w.box([0.0], [1.0])
        plan = w.grid_plan(seg, 1001)
        # oracle: dense (x, u) grid for sup |(x+u)^2 - x^2|
        xs = np.linspace(0, 1, 1000)
        us = np.linspace(1e-4, 1.0, 1000)
        best = 0.0
        for u in us:
            valid = xs[xs + u <= 1.0]
            if len(valid):
                best = max(best, np.max((valid + u) ** 2 - valid ** 2))
        res = w.directional_modulus(poly1d(lambda t: t ** 2), seg, plan,
                                    np.array([1.0]), 1, 1.0, math.inf)
        assert best == pytest.approx(1.0, abs=1e-3)
        assert res.value == pytest.approx(best, abs=2e-3)

    def test_flat_space_member_annihilated(self, axes2):
        basis = w.build_basis(2, 2, axes2)
        sq = w.box([0, 0], [1, 1])
        plan = w.sample_plan(sq, 256, seed=4)
        f = w.PolynomialFunction(basis.exponents, basis.coeffs[3])
        scale = np.max(np.abs(basis.coeffs[3]))
        res = w.set_modulus(f, sq, plan, axes2, 2, math.sqrt(2), math.inf)
        assert res.value <= 1e-9 * max(scale, 1.0)

    def test_empty_shift_sets_flagged(self):
        seg = w.box([0.0], [1.0])
        plan = w.grid_plan(seg, 64)
        res = w.directional_modulus(poly1d(lambda t: t), seg, plan,
                                    np.array([1.0]), 2, 3.0, math.inf,
                                    n_shift=2, refine=False)
        assert res.value == 0.0 and not res.reliable


class TestSetModulus:
    def test_single_direction_reduces(self):
        seg2 = w.box([0, 0], [1, 1])
        plan = w.sample_plan(seg2, 512, seed=1)
        f = w.CallbackFunction(lambda X: X[:, 0] ** 2 + X[:, 1], 2)
        E1 = w.direction_set([[1.0, 0.0]])
        a = w.directional_modulus(f, seg2, plan, np.array([1.0, 0.0]), 1, 1.0, 2.0)
        b = w.set_modulus(f, seg2, plan, E1, 1, 1.0, 2.0)
        assert b.value == pytest.approx(a.value, rel=1e-12)

    def test_monotone_under_symmetrization(self, axes2):
        seg2 = w.box([0, 0], [1, 1])
        plan = w.sample_plan(seg2, 512, seed=1)
        f = w.CallbackFunction(lambda X: np.exp(X[:, 0]) * X[:, 1], 2)
        small = w.set_modulus(f, seg2, plan, axes2, 2, 1.0, math.inf)
        big = w.set_modulus(f, seg2, plan, axes2.symmetrized(), 2, 1.0, math.inf)
        assert big.value >= small.value - 1e-12

    def test_homogeneity_exact(self, axes2):
        seg2 = w.box([0, 0], [1, 1])
        plan = w.sample_plan(seg2, 256, seed=6)
        f = w.CallbackFunction(lambda X: np.sin(X[:, 0] + 2 * X[:, 1]), 2)
        g = w.CallbackFunction(lambda X: -2.5 * np.sin(X[:, 0] + 2 * X[:, 1]), 2)
        a = w.set_modulus(f, seg2, plan, axes2, 1, 0.7, 0.5, refine=False)
        b = w.set_modulus(g, seg2, plan, axes2, 1, 0.7, 0.5, refine=False)
        assert b.value == pytest.approx(2.5 * a.value, rel=1e-12)

    def test_subadditivity_theta(self, axes2):
        seg2 = w.box([0, 0], [1, 1])
        plan = w.sample_plan(seg2, 256, seed=8)
        f = w.CallbackFunction(lambda X: np.cos(3 * X[:, 0]), 2)
        g = w.CallbackFunction(lambda X: X[:, 1] ** 3, 2)
        fg = w.CallbackFunction(lambda X: np.cos(3 * X[:, 0]) + X[:, 1] ** 3, 2)
        for p in (0.5, 1.0, 2.0):
            theta = min(p, 1.0)
            a = w.set_modulus(f, seg2, plan, axes2, 2, 1.0, p, refine=False).value
            b = w.set_modulus(g, seg2, plan, axes2, 2, 1.0, p, refine=False).value
            c = w.set_modulus(fg, seg2, plan, axes2, 2, 1.0, p, refine=False).value
            assert c ** theta <= a ** theta + b ** theta + 1e-10


class TestPairInequality:
    def test_lattice_instances(self):
        # theta-power triangle bound on discrete sets where shifts map
        # lattice points to lattice points
        rng = np.random.default_rng(0)
        for trial in range(50):
            d = int(rng.integers(1, 3))
            r = int(rng.integers(1, 4))
            side = 5
            coords = np.stack(np.meshgrid(*([np.arange(side)] * d),
                                          indexing="ij"), axis=-1).reshape(-1, d)
            K_mask = rng.random(len(coords)) < 0.7
            K = {tuple(c) for c in coords[K_mask]}
            h = np.zeros(d, dtype=int)
            h[rng.integers(0, d)] = rng.integers(1, 3)
            inter = set(tuple(c) for c in coords)
            for j in range(1, r + 1):
                inter &= {tuple(np.array(k) + j * h) for k in K}
            J = {c for c in inter if rng.random() < 0.8}
            pts = sorted(K | J)
            F = {c: rng.standard_normal() for c in pts}
            p = rng.choice([0.5, 1.0, 2.0, math.inf])
            theta = min(p, 1.0)
            KJ = sorted(K | J)
            lhs = w.lp_norm([F[c] for c in KJ], np.ones(len(KJ)), p) ** theta
            Jm = sorted(J)
            diffs = []
            for c in Jm:
                y = np.array(c) - r * h
                val = sum((-1) ** (r + j) * math.comb(r, j)
                          * F[tuple(y + j * h)] for j in range(r + 1))
                diffs.append(val)
            rhs = w.lp_norm(diffs, np.ones(len(diffs)), p) ** theta \
                + 2 ** r * w.lp_norm([F[c] for c in sorted(K)],
                                     np.ones(len(K)), p) ** theta
            assert lhs <= rhs + 1e-12
