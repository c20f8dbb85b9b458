import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import _oracles as orc
from framecomp.errors import IndexOutOfRange, LengthMismatch, NotBlockStructured
from framecomp.optspec import (analyze_completion, avg_P, majorization_bound_check,
                               optimal_spectrum)
from framecomp.vecmaj import majorizes, square, trace_phi
from framecomp.waterfill import is_feasible_pair, waterfill_a


@st.composite
def instances(draw, k_ge_d=None):
    d = draw(st.integers(1, 5))
    if k_ge_d is True:
        k = draw(st.integers(d, 8))
    elif k_ge_d is False:
        k = draw(st.integers(1, max(1, d - 1)))
    else:
        k = draw(st.integers(1, 8))
    lam = sorted(draw(st.lists(st.floats(0, 5), min_size=d, max_size=d)))
    a = sorted(draw(st.lists(st.floats(0.05, 5), min_size=k, max_size=k)), reverse=True)
    return np.array(lam), np.array(a)


class TestAvgP:
    def test_examples(self):
        assert avg_P([0, 0], [3, 1], 1, 1) == 3
        assert avg_P([0, 0], [3, 1], 1, 2) == 2
        assert avg_P([1, 1], [1, 1], 1, 2) == 2
        assert avg_P([1, 2, 4], [2, 1, 1], 2, 3) == 4

    @pytest.mark.parametrize("j,r", [(0, 1), (2, 1), (1, 3)])
    def test_bad_windows(self, j, r):
        with pytest.raises(IndexOutOfRange):
            avg_P([0, 0], [3, 1], j, r)


class TestOptimalSpectrum:
    def test_tight_case(self):
        spec = optimal_spectrum([0, 0], [2, 2])
        assert spec.s_star == 0 and spec.sorted.tolist() == [2, 2] and spec.q == 1

    def test_dominant_norm(self):
        spec = optimal_spectrum([0, 0], [3, 1])
        assert spec.s_star == 1
        assert spec.s_indices == (0, 1, 2)
        assert spec.c_consts == (3, 1)
        assert spec.sorted.tolist() == [3, 1]

    def test_dominant_norm_matches_angle_sweep(self):
        _, fp = orc.angle_sweep_two(3, 1)
        spec = optimal_spectrum([0, 0], [3, 1])
        assert trace_phi(spec.nu_op, square()) == pytest.approx(fp.min(), abs=1e-9)

    def test_fewer_vectors_than_dimension(self):
        spec = optimal_spectrum([0, 1], [3])
        assert spec.nu_op.tolist() == [3, 1]
        # single vector g = sqrt(3)(cos, sin) against diag(0, 1)
        th = np.linspace(0, np.pi, 20001)
        fp = np.array([np.sum(np.linalg.eigvalsh(
            np.diag([0.0, 1.0]) + 3 * np.outer([np.cos(x), np.sin(x)], [np.cos(x), np.sin(x)])) ** 2)
            for x in th])
        assert trace_phi(spec.nu_op, square()) == pytest.approx(fp.min(), abs=1e-8)

    def test_two_level_ladder(self):
        spec = optimal_spectrum([0, 0, 0], [9, 1, 1, 1])
        assert spec.s_star == 1
        np.testing.assert_allclose(spec.sorted.values, [9, 1.5, 1.5])

    def test_matches_qp_oracle(self, rng):
        for _ in range(150):
            d = int(rng.integers(1, 6))
            k = int(rng.integers(1, 9))
            lam = np.sort(rng.uniform(0, 5, d))
            a = np.sort(rng.uniform(0.1, 5, k))[::-1]
            nu, _ = orc.qp_optimal_spectrum(lam, a)
            np.testing.assert_allclose(optimal_spectrum(lam, a).sorted.values, nu, atol=1e-5)

    @settings(max_examples=150, deadline=None)
    @given(instances())
    def test_structural_invariants(self, inst):
        lam, a = inst
        spec = optimal_spectrum(lam, a)
        nu = spec.nu_op.values
        assert abs(nu.sum() - lam.sum() - a.sum()) <= 1e-10 * max(1, nu.sum())
        assert np.all(nu >= lam - 1e-12)
        c = np.array(spec.c_consts)
        # ladder levels strictly decrease
        assert np.all(np.diff(c) < 0)
        s = spec.s_indices
        assert s[0] == 0 and all(x < y for x, y in zip(s, s[1:]))
        assert spec.q == len(c) == len(s) - 1

    @settings(max_examples=100, deadline=None)
    @given(instances(k_ge_d=True))
    def test_ladder_multiset(self, inst):
        lam, a = inst
        spec = optimal_spectrum(lam, a)
        s, c = spec.s_indices, spec.c_consts
        head = np.concatenate([np.full(s[i + 1] - s[i], c[i]) for i in range(spec.q - 1)] or [[]])
        tail = waterfill_a(lam[spec.s_star:], a[spec.s_star:]).nu.values
        np.testing.assert_allclose(np.sort(spec.nu_op.values), np.sort(np.concatenate([head, tail])),
                                   atol=1e-12 * max(1, a.sum()))

    @settings(max_examples=100, deadline=None)
    @given(instances(k_ge_d=True))
    def test_recursion_consistency(self, inst):
        lam, a = inst
        spec = optimal_spectrum(lam, a)
        if spec.s_star == 0:
            return
        s1, c1 = spec.s_indices[1], spec.c_consts[0]
        rest = optimal_spectrum(lam[s1:], a[s1:]).nu_op.values
        np.testing.assert_allclose(np.sort(spec.nu_op.values),
                                   np.sort(np.concatenate([np.full(s1, c1), rest])), atol=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(instances(k_ge_d=True))
    def test_ladder_levels_dominate_later_averages(self, inst):
        lam, a = inst
        spec = optimal_spectrum(lam, a)
        h = lam + a[:lam.size]
        s = spec.s_indices
        for j in range(spec.q - 1):
            for ell in range(s[j] + 1, spec.s_star + 1):
                assert spec.c_consts[j] >= h[s[j]:ell].mean() - 1e-9 * max(1, spec.c_consts[j])

    @settings(max_examples=100, deadline=None)
    @given(instances())
    def test_feasible_pair_regime(self, inst):
        lam, a = inst
        if not is_feasible_pair(lam, a).feasible:
            return
        spec = optimal_spectrum(lam, a)
        wf = waterfill_a(lam, a).nu.values
        np.testing.assert_allclose(spec.sorted.values, np.sort(wf)[::-1], atol=1e-10)
        assert trace_phi(spec.nu_op, square()) == pytest.approx(trace_phi(wf, square()))

    def test_k_lt_d_appends_untouched_tail(self, rng):
        for _ in range(50):
            d = int(rng.integers(2, 6))
            k = int(rng.integers(1, d))
            lam = np.sort(rng.uniform(0, 5, d))
            a = np.sort(rng.uniform(0.1, 5, k))[::-1]
            spec = optimal_spectrum(lam, a)
            np.testing.assert_array_equal(spec.nu_op.values[k:], lam[k:])
            np.testing.assert_allclose(spec.nu_op.values[:k], optimal_spectrum(lam[:k], a).nu_op.values)


class TestMajorizationBound:
    def test_examples(self):
        spec = optimal_spectrum([0, 0], [3, 1])
        assert majorization_bound_check(spec, spec.sorted.values)
        assert majorization_bound_check(spec, [3, 1])
        assert majorization_bound_check(spec, [4, 0])
        assert not majorization_bound_check(spec, [2, 2])

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            majorization_bound_check(optimal_spectrum([0, 0], [3, 1]), [4, 0, 0])

    def test_random_completions_majorize(self, rng):
        for _ in range(20):
            d = int(rng.integers(1, 6))
            k = int(rng.integers(1, 9))
            lam = np.sort(rng.uniform(0, 5, d))
            a = np.sort(rng.uniform(0.1, 5, k))[::-1]
            S0, _ = orc.psd_with_spectrum(lam, rng)
            spec = optimal_spectrum(lam, a)
            for _ in range(100):
                T = orc.random_sphere_frame(d, a, rng)
                assert majorization_bound_check(spec, np.linalg.eigvalsh(S0 + orc.frame_op(T)))


class TestAnalyzeCompletion:
    def test_examples(self):
        b = analyze_completion([0, 0], [3, 1], [3, 1])
        assert (b.p, b.c_list, b.s_list) == (2, (3.0, 1.0), (1, 2))
        b = analyze_completion([0, 0], [2, 2], [2, 2])
        assert (b.p, b.c_list, b.s_list) == (1, (2.0,), (2,))
        b = analyze_completion([1, 2, 4], [1.5, 0.5], [2.5, 2.5, 4])
        assert (b.p, b.c_list, b.s_list) == (1, (2.5,), (2,))
        assert b.residual_tail.tolist() == [4]

    def test_blocks_and_reconstruction(self):
        lam = np.array([0.0, 0.0, 0.0])
        b = analyze_completion(lam, [9, 1, 1, 1], [9, 1.5, 1.5])
        assert b.c_list == (9.0, 1.5) and b.s_list == (1, 3)
        assert [list(r) for r in b.K_blocks] == [[1], [2, 3]]
        assert list(b.J_blocks[0]) == list(b.K_blocks[0])
        assert list(b.J_blocks[-1]) == [2, 3, 4]
        np.testing.assert_allclose(b.reconstructed().values, [9, 1.5, 1.5])

    def test_merges_round_off_splits(self):
        b = analyze_completion([0, 0], [2, 2], [2 + 1e-12, 2 - 1e-12])
        assert b.p == 1

    def test_matches_optimal_spectrum(self, rng):
        for _ in range(50):
            d = int(rng.integers(1, 6))
            k = int(rng.integers(d, 9))
            lam = np.sort(rng.uniform(0, 5, d))
            a = np.sort(rng.uniform(0.1, 5, k))[::-1]
            spec = optimal_spectrum(lam, a)
            b = analyze_completion(lam, a, spec.nu_op.values)
            np.testing.assert_allclose(b.reconstructed().values, spec.sorted.values, atol=1e-9)

    @pytest.mark.parametrize("pairing", [[1, 3], [3, -1], [2.0, 1.0, 1.5]])
    def test_rejects_unstructured(self, pairing):
        lam = [0.0] * len(pairing)
        with pytest.raises(NotBlockStructured):
            analyze_completion(lam, [1.0] * len(pairing), pairing)

    def test_rejects_non_constant_block(self):
        # mu non-increasing but lam + mu ascending inside the support
        with pytest.raises(NotBlockStructured):
            analyze_completion([0, 1], [1, 1], [1, 2])

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            analyze_completion([0, 0], [1, 1], [1, 1, 1])


def test_bound_is_majorized_by_any_commuting_completion(rng):
    # every commuting completion has spectrum lam + perm(mu) with mu from the
    # design polytope; the optimum must sit below all of them
    for _ in range(50):
        d = int(rng.integers(2, 5))
        lam = np.sort(rng.uniform(0, 3, d))
        a = np.sort(rng.uniform(0.1, 3, d + 1))[::-1]
        spec = optimal_spectrum(lam, a)
        T = orc.random_sphere_frame(d, a, rng)
        mu = np.linalg.eigvalsh(orc.frame_op(T))
        for _ in range(5):
            assert majorizes(lam + rng.permutation(mu), spec.nu_op.values)
