"""Minimal distance between a fixed operator and frame operators with
prescribed norms, for unitarily invariant norms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import PreconditionError
from .linop import FrameSeq, HermMat, optimal_completion, random_completion
from .optspec import optimal_spectrum
from .vecmaj import DEFAULT_TOL, SpectrumVec, majorizes, sort_desc
from .waterfill import _descending_positive

FROBENIUS = "frobenius"
SPECTRAL = "spectral"
SCHATTEN = "schatten_p"
KY_FAN = "ky_fan"


@dataclass(frozen=True)
class UINorm:
    """Unitarily invariant norm given by a symmetric gauge of singular values.

    ``p`` is used by ``schatten_p`` and ``j`` by ``ky_fan``.
    """

    kind: str
    p: Optional[float] = None
    j: Optional[int] = None

    def __post_init__(self):
        if self.kind == SCHATTEN and (self.p is None or self.p < 1):
            raise ValueError("schatten_p needs p >= 1")
        if self.kind == KY_FAN and (self.j is None or self.j < 1):
            raise ValueError("ky_fan needs j >= 1")
        if self.kind not in (FROBENIUS, SPECTRAL, SCHATTEN, KY_FAN):
            raise ValueError(f"unknown norm kind {self.kind!r}")

    @property
    def strictly_convex(self) -> bool:
        if self.kind == FROBENIUS:
            return True
        return self.kind == SCHATTEN and 1 < self.p < np.inf

    @property
    def name(self) -> str:
        if self.kind == SCHATTEN:
            return f"schatten:{self.p:g}"
        if self.kind == KY_FAN:
            return f"kyfan:{self.j}"
        return {FROBENIUS: "fro", SPECTRAL: "spec"}[self.kind]

    def gauge(self, s) -> float:
        s = np.sort(np.abs(np.asarray(s, dtype=float).reshape(-1)))[::-1]
        if s.size == 0:
            return 0.0
        if self.kind == FROBENIUS:
            return float(np.linalg.norm(s))
        if self.kind == SPECTRAL:
            return float(s[0])
        if self.kind == SCHATTEN:
            return float(np.linalg.norm(s, self.p))
        return float(np.sum(s[:self.j]))


def frobenius() -> UINorm:
    return UINorm(FROBENIUS)


def spectral() -> UINorm:
    return UINorm(SPECTRAL)


def schatten(p: float) -> UINorm:
    return UINorm(SCHATTEN, p=float(p))


def ky_fan(j: int) -> UINorm:
    return UINorm(KY_FAN, j=int(j))


def parse_norm(spec: str) -> UINorm:
    """Parse ``fro | spec | schatten:<p> | kyfan:<j>``."""
    s = spec.strip().lower()
    if s in ("fro", "frobenius"):
        return frobenius()
    if s in ("spec", "spectral"):
        return spectral()
    if s.startswith("schatten:"):
        return schatten(float(s.split(":", 1)[1]))
    if s.startswith("kyfan:"):
        return ky_fan(int(s.split(":", 1)[1]))
    raise ValueError(f"unknown norm {spec!r}")


def uin_eval(norm: UINorm, A) -> float:
    """Norm of a matrix, or of ``diag(A)`` when ``A`` is one-dimensional."""
    M = np.asarray(A)
    if M.ndim == 1:
        return norm.gauge(M)
    return norm.gauge(np.linalg.svd(M, compute_uv=False))


@dataclass(frozen=True)
class FodSolution:
    """``delta`` is laid out on the eigenvectors of ``S0`` (descending)."""

    delta: SpectrumVec
    min_value: float
    G_op: FrameSeq
    achieved_value: float
    norm: UINorm
    commutator: float


def _psd(S0) -> HermMat:
    return S0 if isinstance(S0, HermMat) else HermMat(np.asarray(S0), psd=True)


def _padded_majorizes(big, small, tol) -> bool:
    m = max(big.size, small.size)
    return majorizes(np.pad(big, (0, m - big.size)), np.pad(small, (0, m - small.size)), tol)


def fod_minimum(S0, a, norm: UINorm = frobenius(), tol: float = DEFAULT_TOL) -> FodSolution:
    """Minimize ``||S0 - S_G||`` over sequences with ``||g_i||^2 = a_i``.

    The problem is reduced to an optimal completion of the complement
    ``||S0|| I - S0``, whose optimal spectrum gives ``delta``.

    Parameters
    ----------
    S0 : HermMat or array_like
        Positive semidefinite target operator.
    a : array_like
        Prescribed squared norms, non-increasing and positive.
    norm : UINorm

    Returns
    -------
    FodSolution
        ``min_value = ||diag(delta)||`` and a minimizer ``G_op``. When ``a`` is
        majorized by ``lambda(S0)`` (zero-padded) the minimum is exactly zero.
    """
    S = _psd(S0)
    av = _descending_positive(a)
    w, V = S.eig()
    w = np.clip(w.values, 0.0, None)
    s_norm = float(w[0])
    lam_c = s_norm - w  # ascending, same eigenvectors
    spec = optimal_spectrum(lam_c, av, tol)
    delta = s_norm - spec.nu_op.values
    if _padded_majorizes(w, av, tol):
        delta = np.zeros_like(delta)
    G, _ = optimal_completion((lam_c, V), av, tol)
    SG = G.T @ G.T.conj().T
    diff = S.entries - SG
    comm = float(np.linalg.norm(S.entries @ SG - SG @ S.entries))
    return FodSolution(SpectrumVec(delta), uin_eval(norm, delta), G,
                       uin_eval(norm, diff), norm, comm)


def fod_equals_potential_const(S0, a, trials: int = 50, seed=0) -> float:
    """Largest spread of ``||S0 - S_G||_F^2 - tr (S0c + S_G)^2`` over samples.

    ``S0c = ||S0|| I - S0``. The difference does not depend on ``G``, so the
    result is round-off only. Sample ``i`` uses seed ``seed + i``.
    """
    if trials < 2:
        raise ValueError("need at least two trials")
    S = _psd(S0)
    av = _descending_positive(a)
    Sc = S.spectral_norm() * np.eye(S.dim) - S.entries
    consts = []
    for i in range(trials):
        T = random_completion(S.dim, av, seed + i).T
        SG = T @ T.conj().T
        theta2 = np.linalg.norm(S.entries - SG) ** 2
        psi = float(np.sum(np.linalg.eigvalsh(Sc + SG) ** 2))
        consts.append(theta2 - psi)
    return float(np.max(np.abs(np.array(consts) - consts[0])))


def fod_uniqueness_check(S0, a, G: FrameSeq, norm: UINorm = frobenius(),
                         tol: float = 1e-8) -> bool:
    """Check that ``G`` attains the minimum exactly when its spectrum is optimal.

    Returns the truth of ``(||S0 - S_G|| = min) <=> (lambda(S0 - S_G) = delta
    sorted)``, each side within ``tol * scale``. At a minimizer it also
    requires ``S0`` and ``S_G`` to commute.
    """
    if not norm.strictly_convex:
        raise PreconditionError(f"{norm.name} is not strictly convex")
    S = _psd(S0)
    sol = fod_minimum(S, a, norm)
    SG = G.T @ G.T.conj().T
    diff = S.entries - SG
    scale = max(1.0, S.spectral_norm(), float(np.sum(a)))
    value_opt = abs(uin_eval(norm, diff) - sol.min_value) <= tol * scale
    spec = np.linalg.eigvalsh(diff)[::-1]
    spec_opt = np.max(np.abs(spec - sort_desc(sol.delta.values).values)) <= tol * scale
    if value_opt and spec_opt:
        return np.linalg.norm(S.entries @ SG - SG @ S.entries) <= tol * scale ** 2
    return value_opt == spec_opt
