import numpy as np
import pytest

import _oracles as orc
from framecomp.errors import PreconditionError
from framecomp.fod import (UINorm, fod_equals_potential_const, fod_minimum,
                           fod_uniqueness_check, frobenius, ky_fan, parse_norm,
                           schatten, spectral, uin_eval)
from framecomp.linop import FrameSeq, HermMat
from framecomp.optspec import optimal_spectrum

NORMS = [frobenius(), spectral(), schatten(3), ky_fan(2)]


def random_instance(rng):
    d = int(rng.integers(1, 6))
    k = int(rng.integers(1, 8))
    S0 = orc.random_psd(d, rng, scale=rng.uniform(0.5, 4), rank=int(rng.integers(1, d + 1)))
    a = np.sort(rng.uniform(0.1, 3, k))[::-1]
    return S0, a


class TestUINorm:
    def test_examples(self):
        assert uin_eval(frobenius(), np.diag([-2.0, 0.0])) == pytest.approx(2)
        assert uin_eval(spectral(), np.eye(3)) == pytest.approx(1)
        assert uin_eval(ky_fan(1), np.diag([3.0, 1.0])) == pytest.approx(3)
        assert uin_eval(frobenius(), [-2.0, 0.0]) == pytest.approx(2)

    def test_gauges(self):
        s = np.array([3.0, -4.0, 1.0])
        assert uin_eval(schatten(2), s) == pytest.approx(uin_eval(frobenius(), s))
        assert uin_eval(schatten(1), s) == pytest.approx(8)
        assert uin_eval(ky_fan(2), s) == pytest.approx(7)
        assert uin_eval(ky_fan(10), s) == pytest.approx(8)

    def test_parse_and_names(self):
        for spec in ("fro", "spec", "schatten:3", "kyfan:2"):
            assert parse_norm(spec).name == spec
        with pytest.raises(ValueError):
            parse_norm("nuclear")
        with pytest.raises(ValueError):
            UINorm("schatten_p", p=0.5)
        with pytest.raises(ValueError):
            UINorm("ky_fan", j=0)

    def test_strict_convexity_flags(self):
        assert frobenius().strictly_convex and schatten(3).strictly_convex
        assert not spectral().strictly_convex
        assert not ky_fan(1).strictly_convex
        assert not schatten(1).strictly_convex

    @pytest.mark.parametrize("norm", NORMS + [schatten(1.5)], ids=lambda n: n.name)
    def test_unitary_invariance(self, norm, rng):
        for _ in range(30):
            d = int(rng.integers(1, 6))
            A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            U, V = orc.random_unitary(d, rng), orc.random_unitary(d, rng)
            assert uin_eval(norm, U @ A @ V) == pytest.approx(uin_eval(norm, A), rel=1e-9)


class TestFodMinimum:
    def test_zero_when_norms_majorized(self):
        S0 = np.diag([2.0, 2.0])
        sol = fod_minimum(S0, [2, 2])
        assert sol.min_value == 0.0
        np.testing.assert_allclose(sol.G_op.frame_operator().entries, S0, atol=1e-12)
        assert sol.achieved_value < 1e-12

    def test_zero_snap_with_padding(self, rng):
        # more vectors than dimensions, norms majorized by the padded spectrum
        S0, _ = orc.psd_with_spectrum([3.0, 2.0, 1.0], rng)
        sol = fod_minimum(S0, [2.0, 2.0, 1.0, 0.5, 0.5])
        assert sol.min_value == 0.0
        assert sol.achieved_value < 1e-9

    def test_single_vector_example(self):
        S0 = np.diag([1.0, 0.0])
        sol = fod_minimum(S0, [3])
        np.testing.assert_allclose(sorted(sol.delta.values), [-2, 0], atol=1e-12)
        assert sol.min_value == pytest.approx(2)
        g = sol.G_op.vectors[0]
        assert abs(abs(g[0]) - np.sqrt(3)) < 1e-12 and abs(g[1]) < 1e-12

    @pytest.mark.parametrize("norm", [frobenius(), spectral()], ids=lambda n: n.name)
    def test_single_vector_angle_sweep(self, norm):
        th = np.linspace(0, np.pi, 4001)
        vals = []
        for x in th:
            g = np.sqrt(3) * np.array([np.cos(x), np.sin(x)])
            vals.append(uin_eval(norm, np.diag([1.0, 0.0]) - np.outer(g, g)))
        assert fod_minimum(np.diag([1.0, 0.0]), [3], norm).min_value == pytest.approx(min(vals), abs=1e-9)

    def test_delta_from_complement(self, rng):
        for _ in range(20):
            S0, a = random_instance(rng)
            sol = fod_minimum(S0, a)
            w = np.clip(np.linalg.eigvalsh(S0)[::-1], 0, None)
            lam_c = w[0] - w
            spec = optimal_spectrum(lam_c, a)
            if sol.min_value > 0:
                np.testing.assert_allclose(sol.delta.values, w[0] - spec.nu_op.values, atol=1e-10)

    def test_zero_operator(self):
        sol = fod_minimum(np.zeros((2, 2)), [3, 1])
        assert sol.min_value == pytest.approx(np.sqrt(10))
        assert sol.achieved_value == pytest.approx(np.sqrt(10))

    @pytest.mark.parametrize("norm", NORMS, ids=lambda n: n.name)
    def test_attainment_and_lower_bound(self, norm, rng):
        for _ in range(15):
            S0, a = random_instance(rng)
            sol = fod_minimum(S0, a, norm)
            scale = max(1.0, np.linalg.norm(S0, 2), a.sum())
            assert abs(sol.achieved_value - sol.min_value) <= 1e-8 * scale
            for _ in range(40):
                T = orc.random_sphere_frame(S0.shape[0], a, rng)
                assert uin_eval(norm, S0 - orc.frame_op(T)) >= sol.min_value - 1e-9 * scale

    def test_commutes_at_optimum(self, rng):
        for _ in range(20):
            S0, a = random_instance(rng)
            sol = fod_minimum(S0, a)
            SG = sol.G_op.frame_operator().entries
            assert sol.commutator <= 1e-8 * max(1, np.linalg.norm(S0) * np.linalg.norm(SG))

    def test_reduction_identity(self, rng):
        for _ in range(30):
            S0, a = random_instance(rng)
            SG = orc.frame_op(orc.random_sphere_frame(S0.shape[0], a, rng))
            n0 = np.linalg.norm(S0, 2)
            lhs = np.linalg.eigvalsh(S0 - SG)
            rhs = n0 - np.linalg.eigvalsh(n0 * np.eye(S0.shape[0]) - S0 + SG)[::-1]
            np.testing.assert_allclose(lhs, rhs, atol=1e-10 * max(1, n0, a.sum()))

    def test_accepts_hermmat(self):
        sol = fod_minimum(HermMat(np.diag([1.0, 0.0]), psd=True), [3], spectral())
        assert sol.min_value == pytest.approx(2)


class TestPotentialIdentity:
    def test_random_instances(self, rng):
        for _ in range(20):
            S0, a = random_instance(rng)
            dev = fod_equals_potential_const(S0, a, trials=20, seed=int(rng.integers(1000)))
            assert dev <= 1e-8 * max(1, np.linalg.norm(S0), a.sum()) ** 2

    def test_zero_operator_constant_is_zero(self):
        assert fod_equals_potential_const(np.zeros((3, 3)), [1.0, 1.0], trials=5) <= 1e-12

    def test_one_dimensional(self):
        assert fod_equals_potential_const(np.array([[2.0]]), [1.0], trials=3) <= 1e-12

    def test_needs_two_trials(self):
        with pytest.raises(ValueError):
            fod_equals_potential_const(np.eye(2), [1.0], trials=1)


class TestUniqueness:
    @pytest.mark.parametrize("norm", [frobenius(), schatten(3)], ids=lambda n: n.name)
    def test_optimizer_and_random(self, norm, rng):
        for _ in range(15):
            S0, a = random_instance(rng)
            sol = fod_minimum(S0, a, norm)
            assert fod_uniqueness_check(S0, a, sol.G_op, norm)
            R = FrameSeq(orc.random_sphere_frame(S0.shape[0], a, rng), synthesis=True)
            assert fod_uniqueness_check(S0, a, R, norm)

    def test_one_dimensional(self):
        assert fod_uniqueness_check(np.array([[1.0]]), [2.0], FrameSeq([[np.sqrt(2)]]))

    @pytest.mark.parametrize("norm", [spectral(), ky_fan(1)], ids=lambda n: n.name)
    def test_rejects_non_strict_norms(self, norm):
        with pytest.raises(PreconditionError):
            fod_uniqueness_check(np.eye(2), [1.0], FrameSeq([[1, 0]]), norm)
