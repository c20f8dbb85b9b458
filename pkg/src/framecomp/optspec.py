"""Optimal completion spectrum and block analysis of completions.

The optimal spectrum is built from a ladder of averages of ``h_i = lam_i + a_i``
over consecutive index windows, closed by a water-fill of the tail beyond
the minimal feasible index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .errors import IndexOutOfRange, LengthMismatch, NotBlockStructured
from .vecmaj import DEFAULT_TOL, UNORDERED, SpectrumVec, majorizes, sort_desc
from .waterfill import (_ascending, _descending_positive, minimal_feasible_index,
                        waterfill_a)


@dataclass(frozen=True)
class OptimalSpectrum:
    """Optimal spectrum in the eigenbasis layout of ``lam`` (ascending).

    ``s_indices`` holds ``0 = s_0 < s_1 < ... < s_q``; ``c_consts`` holds the
    level of each block. Levels decrease along the ladder.
    """

    nu_op: SpectrumVec
    s_indices: Tuple[int, ...]
    c_consts: Tuple[float, ...]
    q: int
    s_star: int

    @property
    def sorted(self) -> SpectrumVec:
        return sort_desc(self.nu_op.values)

    @property
    def trace(self) -> float:
        return self.nu_op.trace


@dataclass(frozen=True)
class BlockAnalysis:
    p: int
    c_list: Tuple[float, ...]
    s_list: Tuple[int, ...]
    K_blocks: Tuple[range, ...]
    J_blocks: Tuple[range, ...]
    residual_tail: SpectrumVec

    def reconstructed(self) -> SpectrumVec:
        """Spectrum of the completed frame operator, non-increasing."""
        parts = []
        prev = 0
        for c, s in zip(self.c_list, self.s_list):
            parts.append(np.full(s - prev, c))
            prev = s
        parts.append(self.residual_tail.values)
        return sort_desc(np.concatenate(parts))


def avg_P(lam, a, j: int, r: int) -> float:
    """Mean of ``lam_i + a_i`` over the 1-based window ``j..r``."""
    lv = np.asarray(lam, dtype=float).reshape(-1)
    av = np.asarray(a, dtype=float).reshape(-1)
    if not (1 <= j <= r <= lv.size and r <= av.size):
        raise IndexOutOfRange(f"window ({j}, {r}) outside 1..min(d, k)")
    return float(np.mean(lv[j - 1:r] + av[j - 1:r]))


def _largest_argmax(vals: np.ndarray, tol: float) -> int:
    best = float(np.max(vals))
    ties = np.nonzero(vals >= best - tol * max(1.0, abs(best)))[0]
    return int(ties[-1])


def _ladder(lam: np.ndarray, a: np.ndarray, s_star: int, tol: float):
    """Block boundaries and levels over the first ``s_star`` entries."""
    h = lam[:s_star] + a[:s_star]
    bounds, levels = [], []
    start = 0
    while start < s_star:
        # running means of h over windows start..r, r = start..s_star-1
        means = np.cumsum(h[start:]) / np.arange(1, s_star - start + 1)
        off = _largest_argmax(means, tol)
        levels.append(float(means[off]))
        start = start + off + 1
        bounds.append(start)
    return bounds, levels


def _optimal_k_ge_d(lam: np.ndarray, a: np.ndarray, tol: float) -> OptimalSpectrum:
    d = lam.size
    s_star = minimal_feasible_index(lam, a, tol)
    bounds, levels = _ladder(lam, a, s_star, tol)
    tail = waterfill_a(lam[s_star:], a[s_star:])
    nu = np.empty(d)
    prev = 0
    for s, c in zip(bounds, levels):
        nu[prev:s] = c
        prev = s
    nu[s_star:] = tail.nu.values
    s_idx = (0, *bounds, s_star + tail.r)
    c_consts = (*levels, tail.c)
    return OptimalSpectrum(SpectrumVec(nu, UNORDERED), s_idx, c_consts,
                           len(c_consts), s_star)


def optimal_spectrum(lam, a, tol: float = DEFAULT_TOL) -> OptimalSpectrum:
    """Spectrum minimizing every strictly convex potential over completions.

    Parameters
    ----------
    lam : array_like
        Eigenvalues of the fixed frame operator, non-decreasing, length ``d``.
    a : array_like
        Prescribed squared norms, non-increasing and positive, length ``k``.
    tol : float
        Slack used by feasibility tests and argmax tie detection.

    Returns
    -------
    OptimalSpectrum
        ``nu_op`` is laid out against ``lam`` (entry ``i`` sits on the
        ``i``-th eigenvector), so ``nu_op - lam`` is the completion spectrum.
        When ``k < d`` the last ``d - k`` entries are ``lam[k:]`` unchanged.
    """
    lv = _ascending(lam)
    av = _descending_positive(a)
    d, k = lv.size, av.size
    if k >= d:
        return _optimal_k_ge_d(lv, av, tol)
    head = _optimal_k_ge_d(lv[:k], av, tol)
    nu = np.concatenate([head.nu_op.values, lv[k:]])
    return OptimalSpectrum(SpectrumVec(nu, UNORDERED), head.s_indices,
                           head.c_consts, head.q, head.s_star)


def majorization_bound_check(nu_op: OptimalSpectrum, spectrum,
                             tol: float = DEFAULT_TOL) -> bool:
    """Whether ``spectrum`` majorizes the optimal spectrum."""
    spec = np.asarray(spectrum, dtype=float).reshape(-1)
    if spec.size != len(nu_op.nu_op):
        raise LengthMismatch(f"spectrum has length {spec.size}, expected {len(nu_op.nu_op)}")
    return majorizes(spec, nu_op.nu_op.values, tol)


def analyze_completion(lam, a, pairing, tol: float = 1e-8) -> BlockAnalysis:
    """Split a paired spectrum ``lam_i + mu_i`` into constant blocks.

    On the support of ``mu`` the paired values must form non-increasing runs
    of equal values; runs closer than ``tol * max(1, c_1)`` are merged.
    """
    lv = np.asarray(lam, dtype=float).reshape(-1)
    av = np.asarray(a, dtype=float).reshape(-1)
    v = np.asarray(pairing, dtype=float).reshape(-1)
    if v.size != lv.size:
        raise LengthMismatch(f"pairing has length {v.size}, expected {lv.size}")
    mu = v - lv
    scale = max(1.0, float(np.max(np.abs(v))))
    if np.any(mu < -tol * scale) or np.any(np.diff(mu) > tol * scale):
        raise NotBlockStructured("mu must be non-negative and non-increasing")
    support = int(np.count_nonzero(mu > tol * scale))
    if support == 0:
        raise NotBlockStructured("completion has empty support")
    gap = tol * max(1.0, float(v[0]))
    c_list: List[float] = []
    s_list: List[int] = []
    start = 0
    for i in range(1, support + 1):
        if i == support or abs(v[i] - v[start]) > gap:
            block = v[start:i]
            if np.ptp(block) > gap:
                raise NotBlockStructured(f"block {start + 1}..{i} is not constant")
            if c_list and block.mean() >= c_list[-1] - gap:
                raise NotBlockStructured("block levels do not decrease")
            c_list.append(float(block.mean()))
            s_list.append(i)
            start = i
    K, J = [], []
    prev = 0
    for j, s in enumerate(s_list):
        K.append(range(prev + 1, s + 1))
        last = j == len(s_list) - 1
        J.append(range(prev + 1, (max(av.size, s) if last else s) + 1))
        prev = s
    return BlockAnalysis(len(c_list), tuple(c_list), tuple(s_list), tuple(K),
                         tuple(J), SpectrumVec(lv[support:]))
