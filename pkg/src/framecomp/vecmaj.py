"""Vector kernel: orderings, (sub)majorization and convex trace functionals.

All comparisons use a relative slack ``tol * max(1, |x|_inf, |y|_inf)`` so
that floating point round-off does not flip exact-arithmetic relations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, LengthMismatch

DEFAULT_TOL = 1e-9

ASCENDING = "ascending"
DESCENDING = "descending"
UNORDERED = "unordered"
_ORDERS = (ASCENDING, DESCENDING, UNORDERED)


@dataclass(frozen=True)
class SpectrumVec:
    """A real vector together with a tag recording how it is ordered."""

    values: np.ndarray
    order: str = UNORDERED

    def __post_init__(self):
        vals = np.array(self.values, dtype=float).reshape(-1)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if self.order not in _ORDERS:
            raise ValueError(f"unknown order tag {self.order!r}")
        diffs = np.diff(vals)
        if self.order == ASCENDING and np.any(diffs < 0):
            raise ValueError("entries are not non-decreasing")
        if self.order == DESCENDING and np.any(diffs > 0):
            raise ValueError("entries are not non-increasing")

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.values
        return self.values.astype(dtype)

    def __len__(self):
        return self.values.size

    def __iter__(self):
        return iter(self.values.tolist())

    def __getitem__(self, item):
        return self.values[item]

    @property
    def trace(self) -> float:
        return float(self.values.sum())

    def tolist(self) -> list:
        return self.values.tolist()


def _vec(x) -> np.ndarray:
    return np.asarray(x, dtype=float).reshape(-1)


def sort_desc(x) -> SpectrumVec:
    """Stable non-increasing rearrangement of ``x``."""
    v = _vec(x)
    idx = np.argsort(-v, kind="stable")
    return SpectrumVec(v[idx], DESCENDING)


def sort_asc(x) -> SpectrumVec:
    """Stable non-decreasing rearrangement of ``x``."""
    v = _vec(x)
    idx = np.argsort(v, kind="stable")
    return SpectrumVec(v[idx], ASCENDING)


def _scale(*vs) -> float:
    return max([1.0] + [float(np.max(np.abs(v))) for v in vs if v.size])


def first_violated_prefix(y, x, tol: float = DEFAULT_TOL) -> Optional[int]:
    """First 1-based ``j`` with ``sum(x_desc[:j]) > sum(y_desc[:j]) + slack``.

    Returns ``None`` when every prefix up to ``min(len x, len y)`` passes.
    """
    xv, yv = _vec(x), _vec(y)
    m = min(xv.size, yv.size)
    slack = tol * _scale(xv, yv)
    px = np.cumsum(np.sort(xv)[::-1][:m])
    py = np.cumsum(np.sort(yv)[::-1][:m])
    bad = np.nonzero(px > py + slack)[0]
    return int(bad[0]) + 1 if bad.size else None


def submajorizes(y, x, tol: float = DEFAULT_TOL) -> bool:
    """True iff ``x`` is submajorized by ``y`` (lengths may differ)."""
    return first_violated_prefix(y, x, tol) is None


def majorizes(y, x, tol: float = DEFAULT_TOL) -> bool:
    """True iff ``x`` is majorized by ``y``: prefix dominance plus equal traces."""
    xv, yv = _vec(x), _vec(y)
    if xv.size != yv.size:
        raise LengthMismatch(f"lengths differ: {xv.size} vs {yv.size}")
    if abs(xv.sum() - yv.sum()) > tol * _scale(xv, yv):
        return False
    return submajorizes(yv, xv, tol)


@dataclass(frozen=True)
class ConvexFn:
    """A convex scalar function applied entrywise / via functional calculus.

    ``domain_min`` is the left end of the domain; the endpoint is excluded
    when ``open_domain`` is set (e.g. ``1/x``).
    """

    kind: str
    fn: Callable = field(repr=False, compare=False)
    deriv: Optional[Callable] = field(default=None, repr=False, compare=False)
    strictly_convex: bool = True
    domain_min: float = -math.inf
    open_domain: bool = False
    p: Optional[float] = None

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))

    def derivative(self, x):
        if self.deriv is None:
            raise DomainError(f"{self.kind} has no declared derivative")
        return self.deriv(np.asarray(x, dtype=float))

    def in_domain(self, x) -> bool:
        v = np.asarray(x, dtype=float)
        if self.open_domain:
            return bool(np.all(v > self.domain_min))
        return bool(np.all(v >= self.domain_min))

    @property
    def name(self) -> str:
        if self.kind == "p_power":
            return f"p:{self.p:g}"
        return self.kind


def square() -> ConvexFn:
    return ConvexFn("square", lambda x: x * x, lambda x: 2.0 * x)


def mse() -> ConvexFn:
    return ConvexFn("mse", lambda x: 1.0 / x, lambda x: -1.0 / (x * x),
                    domain_min=0.0, open_domain=True)


def p_power(p: float) -> ConvexFn:
    if p < 1:
        raise ValueError("p_power requires p >= 1")
    p = float(p)
    # clip guards against -0.0 and tiny negative round-off from eigensolvers
    return ConvexFn("p_power",
                    lambda x: np.power(np.maximum(x, 0.0), p),
                    lambda x: p * np.power(np.maximum(x, 0.0), p - 1.0),
                    strictly_convex=p > 1, domain_min=0.0, p=p)


def exp() -> ConvexFn:
    return ConvexFn("exp", np.exp, np.exp)


def custom(fn, deriv=None, *, strictly_convex=True, domain_min=-math.inf,
           open_domain=False, name="custom") -> ConvexFn:
    return ConvexFn(name, fn, deriv, strictly_convex=strictly_convex,
                    domain_min=domain_min, open_domain=open_domain)


def parse_phi(spec: str) -> ConvexFn:
    """Parse ``square | mse | exp | p:<p>``."""
    s = spec.strip().lower()
    if s == "square":
        return square()
    if s == "mse":
        return mse()
    if s == "exp":
        return exp()
    if s.startswith("p:"):
        return p_power(float(s[2:]))
    raise ValueError(f"unknown potential {spec!r}")


# Slack used when an eigensolver returns -1e-17 for an exact zero eigenvalue.
_DOMAIN_SLACK = 1e-12


def trace_phi(x, phi: ConvexFn) -> float:
    """Return ``sum(phi(x_i))``; raises :class:`DomainError` off the domain."""
    v = _vec(x)
    if phi.open_domain:
        if np.any(v <= phi.domain_min + _DOMAIN_SLACK * max(1.0, np.max(np.abs(v), initial=0.0))):
            raise DomainError(f"{phi.name} is undefined at {v.min():g}")
    elif np.any(v < phi.domain_min - _DOMAIN_SLACK * max(1.0, np.max(np.abs(v), initial=0.0))):
        raise DomainError(f"{phi.name} is undefined at {v.min():g}")
    return float(np.sum(phi(v)))


def strict_major_equal_implies_perm(a, b, tol: float = DEFAULT_TOL) -> bool:
    """Evaluate the implication ``(a majorizes b and |a|, |b| equimeasurable)
    => a, b are rearrangements of each other`` on one input pair.

    Returns ``True`` vacuously when the hypotheses fail.
    """
    av, bv = _vec(a), _vec(b)
    if av.size != bv.size:
        raise LengthMismatch(f"lengths differ: {av.size} vs {bv.size}")
    slack = tol * _scale(av, bv)
    if not majorizes(av, bv, tol):
        return True
    if np.max(np.abs(sort_desc(np.abs(av)).values - sort_desc(np.abs(bv)).values)) > slack:
        return True
    return bool(np.max(np.abs(sort_desc(av).values - sort_desc(bv).values)) <= slack)
