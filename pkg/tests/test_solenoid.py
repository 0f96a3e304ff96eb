import numpy as np
import pytest

import towb
from towb import (CylinderFunction, CylinderSpec, GridFunction, IntervalSet,
                  Measure, PathMeasure, SolPath, TransferOperator)
from towb.errors import DomainError
from towb.trig import TrigPoly


def _id(x):
    return np.asarray(x, dtype=float)


class TestPaths:
    def test_coordinates_doubling(self, op_a):
        path = SolPath(0.0, (1, 1))
        assert np.allclose(towb.coordinates(op_a, path), [0.0, 0.5, 0.75])

    def test_coordinates_empty_word(self, op_a):
        assert np.allclose(towb.coordinates(op_a, SolPath(0.4, ())), [0.4])

    def test_coordinates_thirds(self, op_d):
        assert np.allclose(towb.coordinates(op_d, SolPath(0.0, (1,))),
                           [0.0, 2 / 3])

    def test_backward_consistency(self, op_a):
        # every coordinate is the expanding image of the next one
        rng = np.random.default_rng(0)
        for _ in range(50):
            path = SolPath(float(rng.random()),
                           tuple(rng.integers(0, 2, 5).tolist()))
            xs = towb.coordinates(op_a, path)
            back = np.asarray(op_a.system.sigma(xs[1:]))
            assert np.max(np.abs(back - xs[:-1])) < 1e-12

    def test_shift_forward_example(self, op_a):
        out = towb.shift_forward(op_a, SolPath(0.75, ()))
        assert out.base == pytest.approx(0.5)
        assert out.digits == (1,)

    def test_shift_back_example(self, op_a):
        out = towb.shift_back(op_a, SolPath(0.2, (0,)))
        assert out.base == pytest.approx(0.1)
        assert out.digits == ()

    def test_shift_roundtrip_exact(self, op_a):
        rng = np.random.default_rng(1)
        for _ in range(200):
            path = SolPath(float(rng.random()),
                           tuple(rng.integers(0, 2, 4).tolist()))
            again = towb.shift_back(op_a, towb.shift_forward(op_a, path))
            assert again == path

    def test_boundary_tie_takes_lowest_branch(self, op_a):
        # base 0 is the image of both branch 0 (of 0) and the wrap point
        out = towb.shift_forward(op_a, SolPath(0.0, ()))
        assert out.digits[0] == 0

    def test_shift_back_needs_digits(self, op_a):
        with pytest.raises(DomainError):
            towb.shift_back(op_a, SolPath(0.3, ()))


class TestCylinderMass:
    def test_single_constraint(self, pm_a):
        spec = CylinderSpec([IntervalSet([(0.0, 0.25)])])
        assert towb.cylinder_mass(pm_a, 0.3, spec) == pytest.approx(0.5)
        assert towb.cylinder_mass(pm_a, 0.7, spec) == 0.0

    def test_two_constraints_single_word(self, pm_a):
        half = IntervalSet([(0.0, 0.5)])
        spec = CylinderSpec([half, half])
        for x in (0.05, 0.3, 0.62, 0.99):
            assert towb.cylinder_mass(pm_a, x, spec) == pytest.approx(0.25)

    def test_total_mass_is_h(self, pm_b):
        spec = CylinderSpec([None, None, None])
        for x in (0.0, 0.21, 0.5, 0.83):
            assert towb.cylinder_mass(pm_b, x, spec) == pytest.approx(
                float(pm_b.h(x)), abs=1e-9)

    def test_consistency_under_extension(self, pm_b):
        rng = np.random.default_rng(2)
        for _ in range(10):
            depth = int(rng.integers(1, 5))
            sets = []
            for _ in range(depth):
                lo = rng.uniform(0, 0.6)
                sets.append(IntervalSet([(lo, lo + rng.uniform(0.1, 0.39))]))
            spec = CylinderSpec(sets)
            x = float(rng.random())
            m0 = towb.cylinder_mass(pm_b, x, spec)
            m1 = towb.cylinder_mass(pm_b, x, spec.extended())
            assert abs(m1 - m0) < 10 * max(pm_b.h_residual, 1e-15)

    def test_depth_guard(self, pm_a):
        with pytest.raises(DomainError):
            towb.cylinder_mass(pm_a, 0.1, CylinderSpec([None] * 17))

    def test_untrusted_h_rejected(self, op_a, lam_std):
        bad = PathMeasure.build(op_a, GridFunction.from_callable(_id, 1024),
                                lam_std, strict=False)
        with pytest.raises(DomainError):
            towb.cylinder_mass(bad, 0.1, CylinderSpec([None]))

    def test_spec_parsing(self):
        spec = CylinderSpec.parse("[0,0.25);all;[0.5,0.75)u[0.8,0.9)")
        assert spec.depth == 3
        assert spec.sets[1] is None
        assert spec.sets[2].intervals == ((0.5, 0.75), (0.8, 0.9))


class TestExpectation:
    def test_base_coordinate_mean(self, pm_a):
        assert towb.expectation(pm_a, [_id], "exact") == pytest.approx(0.5)

    def test_first_coordinate_mean(self, pm_a):
        assert towb.expectation(pm_a, [None, _id], "exact") == \
            pytest.approx(0.5, abs=1e-12)

    def test_total_is_probability(self, pm_b):
        assert towb.expectation(pm_b, [None], "exact") == \
            pytest.approx(1.0, abs=1e-10)

    def test_mc_agrees_with_exact(self, pm_b):
        rng = np.random.default_rng(3)
        psi = [None, TrigPoly.random(rng, 3), TrigPoly.random(rng, 3)]
        exact = towb.expectation(pm_b, psi, "exact")
        est, se = towb.expectation(pm_b, psi, "mc", samples=200_000, rng=rng)
        assert abs(est - exact) < 5 * se

    def test_conditional_expectation_example(self, pm_a):
        assert towb.conditional_expectation(pm_a, [None, _id], 0.0) == \
            pytest.approx(0.25)

    def test_conditional_of_one_is_h(self, pm_b):
        for x in (0.1, 0.37, 0.9):
            assert towb.conditional_expectation(pm_b, [None], x) == \
                pytest.approx(float(pm_b.h(x)), abs=1e-10)

    def test_v0_adjoint_of_one(self, pm_b):
        out = towb.v0_adjoint(pm_b, [None])
        assert np.max(np.abs(out.values - 1.0)) < 1e-9

    def test_conditional_bound(self, pm_b):
        rng = np.random.default_rng(4)
        nodes = pm_b.op.nodes
        pts = np.concatenate([pm_b.op.branch_points(nodes).ravel(), nodes])
        for _ in range(20):
            psi = CylinderFunction([TrigPoly.random(rng, 3)
                                    for _ in range(3)])
            sup = psi.sup_bound(pts)
            for x in (0.0, 0.3, 0.77):
                val = towb.conditional_expectation(pm_b, psi, x)
                assert abs(val) <= sup * float(pm_b.h(x)) + 1e-9

    def test_v0_isometry(self, pm_a, lam_std):
        g = IntervalSet([(0.0, 0.5)]).indicator
        lifted_norm = towb.expectation(
            pm_a, [lambda x: np.asarray(g(x)) ** 2], "exact")
        base_norm = towb.integrate(lambda x: np.asarray(g(x)) ** 2 *
                                   np.asarray(pm_a.h(x)), lam_std)
        assert lifted_norm == pytest.approx(0.5, abs=1e-12)
        assert base_norm == pytest.approx(0.5, abs=1e-12)


class TestQuasiInvariance:
    def test_depth_zero_reduces_to_harmonic_residual(self, pm_a, pm_b):
        rng = np.random.default_rng(5)
        for pm in (pm_a, pm_b):
            for _ in range(5):
                psi = CylinderFunction([TrigPoly.random(rng, 5)])
                assert abs(towb.quasi_invariance_defect(pm, psi)) < 1e-10

    def test_cosine_weight_base_integral(self, pm_b, lam_std):
        # both sides of the shifted/unshifted pair integrate the base
        # coordinate to 1/2 for the cosine weight
        sigma = pm_b.op.system.sigma
        w = pm_b.op.system.weight
        lhs = towb.integrate(lambda x: np.asarray(w(x)) * _id(sigma(x)) *
                             np.asarray(pm_b.h(x)), lam_std)
        rhs = towb.integrate(lambda x: _id(x) * np.asarray(pm_b.h(x)),
                             lam_std)
        assert lhs == pytest.approx(0.5, abs=1e-9)
        assert rhs == pytest.approx(0.5, abs=1e-9)
        psi = CylinderFunction([_id])
        assert abs(towb.quasi_invariance_defect(pm_b, psi)) < 1e-10

    def test_depth_two_exact(self, pm_a):
        rng = np.random.default_rng(6)
        for _ in range(10):
            psi = CylinderFunction([TrigPoly.random(rng, 4)
                                    for _ in range(3)])
            assert abs(towb.quasi_invariance_defect(pm_a, psi)) < 1e-12

    def test_mc_mode_within_error(self, pm_b):
        rng = np.random.default_rng(7)
        psi = CylinderFunction([TrigPoly.random(rng, 3),
                                TrigPoly.random(rng, 3)])
        diff, se = towb.quasi_invariance_defect(pm_b, psi, "mc",
                                                samples=100_000, rng=rng)
        assert abs(diff) < 4 * se + 1e-3


class TestUnitary:
    def test_constant_function_norm(self, pm_b, lam_std):
        # ||U 1||^2 integrates the weight against h dlam, which is 1
        psi = CylinderFunction([None])
        u_psi = towb.u_apply(pm_b, psi)
        norm_sq = towb.expectation(pm_b, u_psi.squared(), "exact")
        assert norm_sq == pytest.approx(1.0, abs=1e-10)

    def test_unit_weight_shift_identity(self, pm_a):
        # with W = 1 the weighted shift moves a level-n factor to level n-1
        rng = np.random.default_rng(8)
        f = TrigPoly.random(rng, 4)
        psi = CylinderFunction([None, None, f])
        u_psi = towb.u_apply(pm_a, psi)
        bases = towb.sample_bases(pm_a, 100, rng)
        _, coords = towb.sample_paths(pm_a, bases, 3, rng)
        lhs = u_psi.eval_on_coords(coords)
        rhs = np.asarray(f(coords[:, 1]))
        assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_unitarity_both_fixtures(self, pm_a, pm_b):
        assert towb.unitarity_check(pm_a, trials=20, seed=0) < 1e-10
        assert towb.unitarity_check(pm_b, trials=20, seed=0) < 1e-10


class TestMultires:
    def test_fixtures_pass(self, pm_a, pm_b):
        for pm in (pm_a, pm_b):
            out = towb.multires_check(pm, n_max=4, trials=100, seed=0)
            assert out.nesting_residual < 1e-12
            assert out.shift_residual < 1e-12

    def test_perturbed_sigma_negative_control(self, lam_std):
        from towb.system import PiecewiseAffineMap
        skewed = PiecewiseAffineMap([(0.0, 0.5, 2.01, 0.0),
                                     (0.5, 1.0, 2.01, -1.005)])
        system = towb.sys_a(1024).with_sigma(skewed)
        op = TransferOperator(system, 1024)
        h = GridFunction.constant(1.0, 1024)
        pm = PathMeasure.build(op, h, lam_std)
        out = towb.multires_check(pm, n_max=4, trials=100, seed=0)
        assert out.nesting_residual > 1e-3


class TestMarkov:
    def test_joint_mass_drift(self, pm_a):
        a = IntervalSet([(0.0, 0.25)])
        b = IntervalSet([(0.0, 0.5)])
        m1, m2, diff = towb.markov_deviation(pm_a, a, b, 0.3, 2)
        assert m1 == 0.25
        assert m2 == 0.125
        assert diff == -0.125

    def test_degenerate_sets_constant(self, pm_a):
        half = IntervalSet([(0.0, 0.5)])
        m1, m7, _ = towb.markov_deviation(pm_a, half, half, 0.3, 7)
        assert m1 == pytest.approx(0.25, abs=1e-12)
        assert m7 == pytest.approx(0.25, abs=1e-12)

    def test_long_horizon_mixes(self, pm_a, lam_std):
        a = IntervalSet([(0.0, 0.25)])
        b = IntervalSet([(0.0, 0.5)])
        _, m10, _ = towb.markov_deviation(pm_a, a, b, 0.3, 10)
        target = a.total_length() * towb.integrate(
            lambda x: np.asarray(b.indicator(x)) * np.asarray(pm_a.h(x)),
            lam_std)
        assert abs(m10 - target) < 1e-6


class TestHarmonicFromMeasure:
    def test_reproduces_input(self, pm_a, pm_b):
        for pm in (pm_a, pm_b):
            rebuilt, residual = towb.harmonic_from_measure(pm)
            assert residual < 1e-10
            assert np.max(np.abs(rebuilt.values - pm.h.values)) < 1e-9

    def test_non_harmonic_control(self, op_a, lam_std):
        # feeding the sawtooth exposes a visible fixed-point failure
        bad = PathMeasure.build(op_a, GridFunction.from_callable(_id, 1024),
                                lam_std, strict=False)
        _, residual = towb.harmonic_from_measure(bad)
        assert residual > 0.1

    def test_deeper_total_mass(self, pm_b):
        _, residual = towb.harmonic_from_measure(pm_b, depth=3)
        assert residual < 1e-9
