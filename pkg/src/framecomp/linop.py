"""Frames, Hermitian matrices, potentials and constructive completions.

Vectors live in ``C^d``. A :class:`FrameSeq` stores its synthesis matrix
(``d x k``, columns are the frame vectors) so frame operators are a single
matrix product.
"""

from __future__ import annotations

import threading
from typing import Optional, Tuple

import numpy as np

from .errors import (DimMismatch, InfeasibleDesign, InternalPairingError,
                     NoConvergence)
from .optspec import OptimalSpectrum, optimal_spectrum
from .vecmaj import (DEFAULT_TOL, DESCENDING, ConvexFn,
                     SpectrumVec, first_violated_prefix, majorizes, trace_phi)
from .waterfill import _descending_positive

__all__ = [
    "ConvexFn", "HermMat", "FrameSeq", "frame_operator", "eig_herm",
    "jacobi_eigh", "herm_function", "potential", "schur_horn_design",
    "optimal_completion", "random_completion",
]

HERM_TOL = 1e-12
PSD_TOL = 1e-10


def jacobi_eigh(A, tol: float = 1e-13, max_sweeps: int = 60):
    """Cyclic two-sided Jacobi diagonalization of a Hermitian matrix.

    Each ``(p, q)`` step first removes the phase of ``A[p, q]`` with a
    diagonal unitary, then applies a real plane rotation that annihilates it.

    Parameters
    ----------
    A : array_like
        Hermitian ``d x d`` matrix.
    tol : float
        Stop when the off-diagonal Frobenius norm is at most ``tol * ||A||_F``.
    max_sweeps : int
        Maximum number of full cyclic sweeps.

    Returns
    -------
    w : ndarray
        Eigenvalues, non-increasing.
    V : ndarray
        Unitary matrix whose columns are the matching eigenvectors.
    """
    A = np.array(A, dtype=complex)
    d = A.shape[0]
    V = np.eye(d, dtype=complex)
    thresh = tol * max(np.linalg.norm(A), np.finfo(float).tiny)

    def off(M):
        return np.linalg.norm(M - np.diag(np.diag(M)))

    for _ in range(max_sweeps):
        if off(A) <= thresh:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = A[p, q]
                r = abs(apq)
                if r <= thresh * 1e-3:
                    continue
                phase = apq / r
                theta = 0.5 * np.arctan2(2.0 * r, (A[q, q] - A[p, p]).real)
                c, s = np.cos(theta), np.sin(theta)
                W = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                idx = [p, q]
                A[:, idx] = A[:, idx] @ W
                A[idx, :] = W.conj().T @ A[idx, :]
                A[p, q] = A[q, p] = 0.0
                A[p, p] = A[p, p].real
                A[q, q] = A[q, q].real
                V[:, idx] = V[:, idx] @ W
    else:
        if off(A) > thresh:
            raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.real(np.diag(A))
    order = np.argsort(-w, kind="stable")
    return w[order], V[:, order]


class HermMat:
    """Hermitian matrix with a lazily cached eigendecomposition.

    Parameters
    ----------
    entries : array_like
        Square matrix; must be Hermitian to ``1e-12`` (relative). It is
        stored symmetrized.
    psd : bool
        If set, all eigenvalues must be at least ``-1e-10 * ||A||``.
    """

    def __init__(self, entries, psd: bool = False):
        M = np.array(entries, dtype=complex)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DimMismatch(f"expected a square matrix, got shape {M.shape}")
        scale = max(1.0, float(np.max(np.abs(M), initial=0.0)))
        if np.max(np.abs(M - M.conj().T), initial=0.0) > HERM_TOL * scale:
            raise ValueError("matrix is not Hermitian")
        M = 0.5 * (M + M.conj().T)
        M.setflags(write=False)
        self.entries = M
        self.psd = psd
        self._eig = None
        self._lock = threading.Lock()
        if psd:
            w = self.eig()[0].values
            if w.size and w[-1] < -PSD_TOL * max(1.0, abs(w[0])):
                raise ValueError(f"matrix is not PSD (min eigenvalue {w[-1]:g})")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def eig(self) -> Tuple[SpectrumVec, np.ndarray]:
        """Eigenvalues (non-increasing) and unitary eigenvectors, cached."""
        if self._eig is None:
            with self._lock:
                if self._eig is None:
                    self._eig = eig_herm(self.entries)
        return self._eig

    def eig_asc(self) -> Tuple[np.ndarray, np.ndarray]:
        w, V = self.eig()
        return w.values[::-1].copy(), V[:, ::-1].copy()

    def spectral_norm(self) -> float:
        w = self.eig()[0].values
        return float(np.max(np.abs(w), initial=0.0))

    def __add__(self, other):
        return HermMat(self.entries + np.asarray(other))

    def __sub__(self, other):
        return HermMat(self.entries - np.asarray(other))


class FrameSeq:
    """Finite sequence of vectors in ``C^d``.

    Parameters
    ----------
    vectors : array_like
        Either a ``d x k`` synthesis matrix (``synthesis=True``) or a
        sequence of ``k`` vectors of length ``d``.
    dim : int, optional
        Ambient dimension; required for an empty sequence.
    """

    def __init__(self, vectors, dim: Optional[int] = None, synthesis: bool = False):
        if synthesis:
            T = np.array(vectors, dtype=complex)
            if T.ndim != 2:
                raise DimMismatch("synthesis matrix must be two-dimensional")
        else:
            vecs = [np.asarray(v, dtype=complex).reshape(-1) for v in vectors]
            if not vecs:
                if dim is None:
                    raise DimMismatch("empty frame needs an explicit dimension")
                T = np.zeros((dim, 0), dtype=complex)
            else:
                sizes = {v.size for v in vecs}
                if len(sizes) != 1:
                    raise DimMismatch(f"vectors have different lengths {sorted(sizes)}")
                T = np.stack(vecs, axis=1)
        if dim is not None and T.shape[0] != dim:
            raise DimMismatch(f"vectors have length {T.shape[0]}, expected {dim}")
        T.setflags(write=False)
        self.T = T

    @property
    def dim(self) -> int:
        return self.T.shape[0]

    def __len__(self) -> int:
        return self.T.shape[1]

    @property
    def vectors(self):
        return [self.T[:, i] for i in range(len(self))]

    def norm_squares(self) -> np.ndarray:
        return np.sum(np.abs(self.T) ** 2, axis=0)

    def frame_operator(self) -> HermMat:
        return HermMat(self.T @ self.T.conj().T)

    def rotated(self, U) -> "FrameSeq":
        """Apply a ``d x d`` matrix to every vector."""
        return FrameSeq(np.asarray(U) @ self.T, synthesis=True)


def frame_operator(F: FrameSeq) -> HermMat:
    """``S_F = T_F T_F^*``."""
    return F.frame_operator()


def eig_herm(A, method: str = "lapack") -> Tuple[SpectrumVec, np.ndarray]:
    """Eigenvalues (non-increasing) and eigenvectors of a Hermitian matrix.

    ``method="jacobi"`` uses :func:`jacobi_eigh`; the default calls LAPACK
    through :func:`numpy.linalg.eigh`. Ties keep a deterministic order.
    """
    M = np.asarray(A, dtype=complex)
    if method == "jacobi":
        w, V = jacobi_eigh(M)
    elif method == "lapack":
        w, V = np.linalg.eigh(M)
        w, V = w[::-1], V[:, ::-1]
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    return SpectrumVec(w, DESCENDING), V


def herm_function(A, f) -> np.ndarray:
    """Functional calculus ``f(A) = V f(w) V^*``."""
    w, V = np.linalg.eigh(np.asarray(A, dtype=complex))
    return (V * f(w)) @ V.conj().T


def _as_operator(F0, d: Optional[int] = None) -> np.ndarray:
    if F0 is None:
        if d is None:
            raise DimMismatch("dimension required when no fixed frame is given")
        return np.zeros((d, d), dtype=complex)
    if isinstance(F0, FrameSeq):
        S = F0.T @ F0.T.conj().T
    else:
        S = np.asarray(F0, dtype=complex)
    if d is not None and S.shape[0] != d:
        raise DimMismatch(f"fixed operator has dimension {S.shape[0]}, expected {d}")
    return S


def potential(F0, G: FrameSeq, phi: ConvexFn) -> float:
    """``tr phi(S_F0 + S_G)``; ``F0`` may be a frame, matrix or ``None``."""
    S = _as_operator(F0, G.dim) + G.T @ G.T.conj().T
    w = np.linalg.eigvalsh(S)
    return trace_phi(w, phi)


def _chan_li_chain(diag0: np.ndarray, targets: np.ndarray):
    """Orthogonal ``Q`` with ``diag(Q^T diag(diag0) Q)`` equal to ``targets``.

    Returns ``Q`` and ``slot``, where ``slot[t]`` is the column carrying
    target ``t``.
    """
    k = diag0.size
    Q = np.eye(k)
    cur = diag0.astype(float).copy()
    active = list(range(k))
    slot = np.empty(k, dtype=int)
    for t in range(k - 1):
        a = targets[t]
        order = sorted(active, key=lambda i: -cur[i])
        vals = cur[order]
        p = next((j for j in range(len(order) - 1)
                  if vals[j] >= a >= vals[j + 1]), None)
        if p is None:
            # round-off pushed a outside [min, max]; clamp to the nearest end
            p = 0 if a > vals[0] else len(order) - 2
        i, j = order[p], order[p + 1]
        x, y = cur[i], cur[j]
        c2 = 1.0 if x - y <= 0 else float(np.clip((a - y) / (x - y), 0.0, 1.0))
        c, s = np.sqrt(c2), np.sqrt(1.0 - c2)
        qi, qj = Q[:, i].copy(), Q[:, j].copy()
        Q[:, i] = c * qi + s * qj
        Q[:, j] = -s * qi + c * qj
        cur[i], cur[j] = a, x + y - a
        slot[t] = i
        active.remove(i)
    slot[k - 1] = active[0]
    return Q, slot


def schur_horn_design(mu, a, basis=None, tol: float = DEFAULT_TOL) -> FrameSeq:
    """Vectors with squared norms ``a`` whose frame operator has spectrum ``mu``.

    Parameters
    ----------
    mu : array_like
        Non-negative target eigenvalues, length ``d``; entry ``i`` is placed on
        column ``i`` of ``basis``.
    a : array_like
        Prescribed squared norms (non-increasing, positive), length ``k``.
    basis : array_like, optional
        ``d x d`` unitary; defaults to the identity.

    Returns
    -------
    FrameSeq
        ``g_1..g_k`` with ``||g_i||^2 = a_i`` and
        ``S_G = basis diag(mu) basis^*``.

    Raises
    ------
    InfeasibleDesign
        If ``a`` is not majorized by ``mu`` (both zero-padded to equal length).
    """
    mv = np.asarray(mu, dtype=float).reshape(-1)
    av = _descending_positive(a)
    d, k = mv.size, av.size
    scale = max(1.0, float(np.max(np.abs(mv), initial=0.0)))
    if np.any(mv < -tol * scale):
        raise InfeasibleDesign("target spectrum has negative entries")
    mv = np.maximum(mv, 0.0)
    m = max(d, k)
    mpad = np.concatenate([mv, np.zeros(m - d)])
    apad = np.concatenate([av, np.zeros(m - k)])
    if not majorizes(mpad, apad, tol):
        raise InfeasibleDesign("norms are not majorized by the target spectrum",
                               first_violated_prefix(mpad, apad, tol))
    # slots in descending order of mu so that zero eigenvalues sit at the end
    perm = np.argsort(-mv, kind="stable")
    lam_k = np.zeros(k)
    r = min(d, k)
    lam_k[:r] = mv[perm[:r]]
    Q, slot = _chan_li_chain(lam_k, av)
    T_small = np.sqrt(lam_k)[:, None] * Q
    T = np.zeros((d, k), dtype=complex)
    T[perm[:r], :] = T_small[:r, slot]
    if basis is not None:
        B = np.asarray(basis, dtype=complex)
        if B.shape != (d, d):
            raise DimMismatch(f"basis has shape {B.shape}, expected {(d, d)}")
        T = B @ T
    return FrameSeq(T, synthesis=True)


def _fixed_spectrum(F0, d: Optional[int]):
    """Ascending eigenvalues and matching eigenvectors of the fixed part."""
    if isinstance(F0, tuple):
        lam, V = F0
        lam = np.asarray(lam, dtype=float)
        V = np.asarray(V, dtype=complex)
        order = np.argsort(lam, kind="stable")
        return lam[order], V[:, order]
    S = HermMat(_as_operator(F0, d))
    lam, V = S.eig_asc()
    return lam, V


def optimal_completion(F0, a, tol: float = DEFAULT_TOL, d: Optional[int] = None
                       ) -> Tuple[FrameSeq, OptimalSpectrum]:
    """Completion ``G`` with norms ``a`` realizing the optimal spectrum.

    Parameters
    ----------
    F0 : FrameSeq, array_like, tuple or None
        Fixed part as a frame, a frame operator, a ``(lam, V)`` eigenpair or
        ``None`` (zero operator; then ``d`` is required).
    a : array_like
        Prescribed squared norms, non-increasing and positive.

    Returns
    -------
    G : FrameSeq
    spec : OptimalSpectrum
        Laid out against the ascending eigenvalues of the fixed part.
    """
    lam, V = _fixed_spectrum(F0, d)
    scale = max(1.0, float(np.max(np.abs(lam), initial=0.0)))
    # eigensolver round-off can leave -1e-16 on a PSD spectrum
    lam = np.where((lam < 0) & (lam > -PSD_TOL * scale), 0.0, lam)
    av = _descending_positive(a)
    spec = optimal_spectrum(lam, av, tol)
    mu = spec.nu_op.values - lam
    slack = max(tol, 1e-8) * max(scale, float(np.max(np.abs(spec.nu_op.values))))
    if np.any(mu < -slack):
        raise InternalPairingError(f"negative completion eigenvalue {mu.min():g}")
    if np.any(np.diff(mu) > slack):
        raise InternalPairingError("completion spectrum is not non-increasing")
    mu = np.maximum(mu, 0.0)
    # rebalance round-off so the trace matches sum(a) exactly
    mu_tr = mu.sum()
    if mu_tr > 0:
        mu = mu * (av.sum() / mu_tr)
    G = schur_horn_design(mu, av, basis=V, tol=max(tol, 1e-8))
    return G, spec


def random_completion(d: int, a, seed=None) -> FrameSeq:
    """Random vectors ``g_i`` with ``||g_i||^2 = a_i``, uniform directions.

    ``seed`` may be an int or a :class:`numpy.random.Generator`.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    av = np.asarray(a, dtype=float).reshape(-1)
    Z = rng.standard_normal((d, av.size)) + 1j * rng.standard_normal((d, av.size))
    Z /= np.linalg.norm(Z, axis=0)
    return FrameSeq(Z * np.sqrt(av), synthesis=True)
