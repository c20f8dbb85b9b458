"""Water-filling over an ascending profile and feasibility of norm sequences.

Conventions: ``lam`` is non-decreasing (eigenvalues of the fixed part),
``a`` is non-increasing and strictly positive (prescribed squared norms).
Indices in the public API are 1-based where they count entries (``r``,
``violated_prefix``) and 0-based where they count truncated entries (``s``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, IndexOutOfRange, PreconditionError
from .vecmaj import ASCENDING, DEFAULT_TOL, DESCENDING, UNORDERED, SpectrumVec


@dataclass(frozen=True)
class WaterfillResult:
    c: float
    nu: SpectrumVec
    mu: SpectrumVec
    r: int


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    mu: SpectrumVec
    violated_prefix: Optional[int] = None
    s_star: Optional[int] = None


def _ascending(lam) -> np.ndarray:
    v = np.asarray(lam, dtype=float).reshape(-1)
    if v.size == 0:
        raise DomainError("empty eigenvalue profile")
    if np.any(np.diff(v) < 0):
        raise DomainError("lambda must be non-decreasing")
    return v


def _descending_positive(a) -> np.ndarray:
    v = np.asarray(a, dtype=float).reshape(-1)
    if v.size == 0:
        raise DomainError("empty norm sequence")
    if np.any(v <= 0):
        raise DomainError("prescribed norms must be positive")
    if np.any(np.diff(v) > 0):
        raise DomainError("a must be non-increasing")
    return v


def h_lambda(lam, x: float) -> float:
    """Filled mass ``sum((x - lam_i)^+)`` for a level ``x >= lam_1``."""
    v = _ascending(lam)
    if x < v[0]:
        raise DomainError(f"level {x} is below lambda_1 = {v[0]}")
    return float(np.sum(np.maximum(x - v, 0.0)))


def waterfill_t(lam, t: float) -> WaterfillResult:
    """Raise a level ``c`` over ``lam`` until the filled mass equals ``t``.

    Exact piecewise-linear inversion: with prefix sums, ``r`` is the first
    index such that ``(t + lam_1 + ... + lam_r) / r < lam_{r+1}``.
    """
    v = _ascending(lam)
    if not t > 0:
        raise DomainError(f"budget must be positive, got {t}")
    d = v.size
    levels = (t + np.cumsum(v)) / np.arange(1, d + 1)
    below = np.nonzero(levels[:-1] < v[1:])[0]
    r = int(below[0]) + 1 if below.size else d
    c = float(levels[r - 1])
    nu = v.copy()
    nu[:r] = c
    return WaterfillResult(c, SpectrumVec(nu, ASCENDING),
                           SpectrumVec(nu - v, DESCENDING), r)


def waterfill_a(lam, a) -> WaterfillResult:
    """Water-filling with budget ``sum(a)`` restricted to ``min(k, d)`` slots.

    For ``k < d`` only the first ``k`` entries of ``lam`` are lifted and the
    result may be unordered.
    """
    v = _ascending(lam)
    av = _descending_positive(a)
    d, k = v.size, av.size
    t = float(av.sum())
    if k >= d:
        return waterfill_t(v, t)
    head = waterfill_t(v[:k], t)
    nu = np.concatenate([head.nu.values, v[k:]])
    mu = np.concatenate([head.mu.values, np.zeros(d - k)])
    return WaterfillResult(head.c, SpectrumVec(nu, UNORDERED),
                           SpectrumVec(mu, DESCENDING), head.r)


def is_feasible_pair(lam, a, tol: float = DEFAULT_TOL) -> FeasibilityReport:
    """Check whether ``a`` is majorized by the water-filling mass ``mu(lam, a)``.

    Only prefixes ``j < min(k, d)`` are tested; the trace identity holds by
    construction.
    """
    av = _descending_positive(a)
    wf = waterfill_a(lam, av)
    mu = wf.mu.values
    r = min(av.size, mu.size)
    pa = np.cumsum(av[:r - 1])
    pm = np.cumsum(mu[:r - 1])
    slack = tol * max(1.0, float(av[0]), float(mu[0]))
    bad = np.nonzero(pa > pm + slack)[0]
    if bad.size:
        return FeasibilityReport(False, wf.mu, int(bad[0]) + 1)
    return FeasibilityReport(True, wf.mu)


def truncate(lam, a, s: int):
    """Drop the first ``s`` entries of both ``lam`` and ``a``."""
    return np.asarray(lam, dtype=float)[s:], np.asarray(a, dtype=float)[s:]


def is_feasible_index(lam, a, s: int, tol: float = DEFAULT_TOL) -> bool:
    """Whether the truncated pair ``(lam[s:], a[s:])`` is feasible."""
    v = _ascending(lam)
    av = _descending_positive(a)
    if not 0 <= s <= v.size - 1 or s >= av.size:
        raise IndexOutOfRange(f"index s={s} outside [0, min(d-1, k-1)]")
    lt, at = truncate(v, av, s)
    return is_feasible_pair(lt, at, tol).feasible


def minimal_feasible_index(lam, a, tol: float = DEFAULT_TOL) -> int:
    """Smallest feasible truncation index; requires ``k >= d``."""
    v = _ascending(lam)
    av = _descending_positive(a)
    d, k = v.size, av.size
    if k < d:
        raise PreconditionError(f"minimal feasible index needs k >= d (k={k}, d={d})")
    for s in range(d):
        if is_feasible_index(v, av, s, tol):
            return s
    # s = d - 1 leaves a single slot, which is always feasible
    raise AssertionError("unreachable: last index is always feasible")


def feasibility_report(lam, a, tol: float = DEFAULT_TOL) -> FeasibilityReport:
    """Feasibility of the pair, augmented with ``s_star`` when ``k >= d``."""
    rep = is_feasible_pair(lam, a, tol)
    if np.asarray(a).size >= np.asarray(lam).size:
        s = minimal_feasible_index(lam, a, tol)
        return FeasibilityReport(rep.feasible, rep.mu, rep.violated_prefix, s)
    return rep
