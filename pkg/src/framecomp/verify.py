"""Empirical checks: descent on sphere products and unitary orbits, and
explicit strict-descent directions at non-optimal completions.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import DomainError, PreconditionError
from .linop import FrameSeq, _as_operator, random_completion
from .optspec import optimal_spectrum
from .vecmaj import ConvexFn, trace_phi
from .waterfill import _descending_positive


@dataclass(frozen=True)
class DescentConfig:
    """Settings for projected gradient descent with Armijo backtracking.

    ``grad_tol`` and ``stall_tol`` are relative to ``max(1, |value|)``.
    The first trial step of each iteration is a Barzilai-Borwein estimate
    (``step_init`` on the first iteration).
    """

    max_iters: int = 5000
    step_init: float = 1e-2
    step_shrink: float = 0.5
    grad_tol: float = 1e-10
    stall_tol: float = 1e-6
    noise_grad_ratio: float = 1.0
    max_backtracks: int = 60
    restarts: int = 1
    seed: int = 0
    armijo: float = 1e-4
    workers: int = 1
    record_trajectory: bool = False

    def __post_init__(self):
        if self.max_iters <= 0 or self.step_init <= 0 or self.grad_tol <= 0:
            raise ValueError("max_iters, step_init and grad_tol must be positive")
        if not 0 < self.step_shrink < 1:
            raise ValueError("step_shrink must lie in (0, 1)")
        if self.restarts <= 0:
            raise ValueError("restarts must be positive")


@dataclass(frozen=True)
class RestartResult:
    index: int
    final_value: float
    gap: float
    iters: int
    converged: bool
    trajectory: Optional[List[Tuple[int, float]]] = None


@dataclass(frozen=True)
class DescentReport:
    """Best restart plus the per-restart records, in restart order."""

    final_value: float
    global_value: float
    gap: float
    iters: int
    converged: bool
    trajectory: Optional[List[Tuple[int, float]]] = None
    restarts: Tuple[RestartResult, ...] = field(default=(), repr=False)
    final_point: object = field(default=None, repr=False, compare=False)

    @property
    def max_converged_gap(self) -> float:
        gaps = [r.gap for r in self.restarts if r.converged]
        return max(gaps) if gaps else float("nan")

    @property
    def converged_fraction(self) -> float:
        return sum(r.converged for r in self.restarts) / max(1, len(self.restarts))


# relative size of value changes treated as round-off
_NOISE = 1e-13


def _require_smooth(phi: ConvexFn):
    if not phi.strictly_convex:
        raise PreconditionError(f"{phi.name} is not strictly convex")
    if phi.deriv is None:
        raise PreconditionError(f"{phi.name} has no derivative")


def _eig_checked(S, phi: ConvexFn):
    w, V = np.linalg.eigh(S)
    trace_phi(w, phi)  # raises DomainError off the domain
    return w, V


def _value(S0, T, phi):
    return trace_phi(np.linalg.eigvalsh(S0 + T @ T.conj().T), phi)


def _tangent_grad(S0, T, phi):
    w, V = _eig_checked(S0 + T @ T.conj().T, phi)
    E = 2.0 * ((V * phi.derivative(w)) @ V.conj().T) @ T
    radial = np.real(np.sum(np.conj(T) * E, axis=0)) / np.sum(np.abs(T) ** 2, axis=0)
    return E - T * radial, float(np.sum(phi(w)))


def riemannian_grad(F0_spec, G: FrameSeq, phi: ConvexFn) -> np.ndarray:
    """Tangential gradient of ``G -> tr phi(S_F0 + S_G)`` on the sphere product.

    Returns a ``d x k`` array whose column ``i`` is the gradient with respect
    to ``g_i`` for the real inner product ``Re <x, y>``.
    """
    if phi.deriv is None:
        raise DomainError(f"{phi.name} has no derivative")
    S0 = _as_operator(F0_spec, G.dim)
    return _tangent_grad(S0, np.asarray(G.T), phi)[0]


def _retract(T, a_sqrt):
    return T * (a_sqrt / np.linalg.norm(T, axis=0))


def _bb_step(s, y, fallback):
    sy = float(np.real(np.vdot(s, y)))
    if sy <= 0:
        return fallback
    return float(np.real(np.vdot(s, s))) / sy


def _descent_loop(x, grad_value, trial, displacement, cfg):
    """Armijo backtracking with Barzilai-Borwein trial steps.

    A step is accepted on a sufficient strict decrease. Once value changes
    drop below round-off, a step that leaves the value unchanged to within
    ``_NOISE`` is accepted only if it shrinks the gradient norm (an
    approximate Armijo rule). If the line search still fails, the run stops
    and counts as converged when the gradient is below ``cfg.stall_tol``.
    """
    g, f = grad_value(x)
    eta = cfg.step_init
    traj = [(0, f)] if cfg.record_trajectory else None
    it = 0
    while True:
        gn = float(np.sqrt(np.sum(np.abs(g) ** 2)))
        bound = max(1.0, abs(f))
        if gn <= cfg.grad_tol * bound:
            return x, f, it, True, traj
        if it >= cfg.max_iters:
            return x, f, it, False, traj
        step = eta
        noise = _NOISE * bound
        g_new = None
        for _ in range(cfg.max_backtracks):
            x_new, f_new = trial(x, g, step)
            if f_new < f and f_new <= f - cfg.armijo * step * gn * gn:
                break
            if abs(f_new - f) <= noise:
                # value change is below round-off: accept on a smaller gradient
                g_try, _ = grad_value(x_new)
                if np.sqrt(np.sum(np.abs(g_try) ** 2)) < cfg.noise_grad_ratio * gn:
                    g_new = g_try
                    break
            step *= cfg.step_shrink
        else:
            return x, f, it, gn <= cfg.stall_tol * bound, traj
        it += 1
        if g_new is None:
            g_new, f_new = grad_value(x_new)
        eta = _bb_step(displacement(x, x_new, g, step), g_new - g,
                       step / cfg.step_shrink)
        x, g, f = x_new, g_new, f_new
        if traj is not None:
            traj.append((it, f))


def _descend_one(S0, a, phi, cfg, seed):
    a_sqrt = np.sqrt(a)

    def trial(T, g, step):
        T_new = _retract(T - step * g, a_sqrt)
        try:
            return T_new, _value(S0, T_new, phi)
        except DomainError:
            return T_new, np.inf

    T0 = np.array(random_completion(S0.shape[0], a, seed).T)
    return _descent_loop(T0, lambda T: _tangent_grad(S0, T, phi), trial,
                         lambda x, x_new, g, step: x_new - x, cfg)


def _run_restarts(job, cfg: DescentConfig):
    seeds = [cfg.seed + r for r in range(cfg.restarts)]
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(job, seeds))
    return [job(s) for s in seeds]


def _report(outs, global_value):
    recs = []
    for idx, (_, f, it, conv, traj) in enumerate(outs):
        recs.append(RestartResult(idx, f, f - global_value, it, conv, traj))
    best = min(range(len(recs)), key=lambda i: recs[i].final_value)
    b = recs[best]
    return DescentReport(b.final_value, global_value, b.gap, b.iters, b.converged,
                         b.trajectory, tuple(recs), outs[best][0])


def descend_Ta(F0_spec, a, phi: ConvexFn, cfg: DescentConfig = DescentConfig(),
               d: Optional[int] = None) -> DescentReport:
    """Multi-start descent of ``tr phi(S_F0 + S_G)`` over ``||g_i||^2 = a_i``.

    Restart ``r`` is seeded with ``cfg.seed + r``. The reported global value is
    ``tr phi`` of the optimal spectrum, a lower bound for every restart.
    """
    _require_smooth(phi)
    av = _descending_positive(a)
    S0 = _as_operator(F0_spec, d)
    lam = np.clip(np.linalg.eigvalsh(S0), 0.0, None)
    global_value = trace_phi(optimal_spectrum(lam, av).nu_op.values, phi)
    outs = _run_restarts(lambda s: _descend_one(S0, av, phi, cfg, s), cfg)
    return _report(outs, global_value)


def _random_unitary(d, rng):
    Z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def _unitary_exp(X, eta):
    """``exp(-eta X)`` for skew-Hermitian ``X``, via the Hermitian ``-iX``."""
    w, V = np.linalg.eigh(-1j * X)
    return (V * np.exp(-1j * eta * w)) @ V.conj().T


def _orbit_grad(S, G, phi):
    w, V = _eig_checked(S + G, phi)
    M = (V * phi.derivative(w)) @ V.conj().T
    return M @ G - G @ M, float(np.sum(phi(w)))


def _orbit_one(S, mu, phi, cfg, seed):
    rng = np.random.default_rng(seed)
    U = _random_unitary(S.shape[0], rng)

    def trial(G, X, step):
        W = _unitary_exp(X, step)
        G_new = W @ G @ W.conj().T
        G_new = 0.5 * (G_new + G_new.conj().T)
        try:
            return G_new, trace_phi(np.linalg.eigvalsh(S + G_new), phi)
        except DomainError:
            return G_new, np.inf

    # the step lives in the Lie algebra, so the displacement is -step * X
    return _descent_loop((U * mu) @ U.conj().T, lambda G: _orbit_grad(S, G, phi),
                         trial, lambda x, x_new, X, step: -step * X, cfg)


def descend_orbit(S, mu, phi: ConvexFn, cfg: DescentConfig = DescentConfig()
                  ) -> DescentReport:
    """Descent of ``G -> tr phi(S + G)`` over ``G = U diag(mu) U^*``.

    Each step conjugates by ``exp(-eta X)`` with ``X = [phi'(S + G), G]``,
    the Riemannian gradient. The global value pairs ``lambda(S)`` ascending
    with ``mu`` descending.
    """
    _require_smooth(phi)
    Sm = np.asarray(S, dtype=complex)
    mv = np.sort(np.asarray(mu, dtype=float).reshape(-1))[::-1]
    if mv.size != Sm.shape[0]:
        raise ValueError(f"mu has length {mv.size}, expected {Sm.shape[0]}")
    global_value = trace_phi(np.linalg.eigvalsh(Sm) + mv, phi)
    outs = _run_restarts(lambda s: _orbit_one(Sm, mv, phi, cfg, s), cfg)
    return _report(outs, global_value)


@dataclass(frozen=True)
class Certificate:
    """A curve along which the potential strictly decreases.

    ``kind`` is one of ``"mispairing"``, ``"out_of_order"`` or
    ``"dependent_block"``; ``G_t`` is the perturbed sequence at parameter ``t``.
    """

    kind: str
    description: str
    t: float
    predicted_decrease: float
    actual_decrease: float
    G_t: FrameSeq = field(repr=False)


def _joint_basis(S0, SG, tol):
    """Common eigenbasis: ``S0`` ascending, ``S_G`` descending inside ties."""
    lam, V = np.linalg.eigh(S0)
    scale = max(1.0, float(np.max(np.abs(lam), initial=0.0)))
    groups, start = [], 0
    for i in range(1, lam.size + 1):
        if i == lam.size or lam[i] - lam[start] > tol * scale:
            groups.append(range(start, i))
            start = i
    B = np.empty_like(V)
    for g in groups:
        Vg = V[:, g]
        w, Y = np.linalg.eigh(Vg.conj().T @ SG @ Vg)
        B[:, g] = Vg @ Y[:, ::-1]
    lam_b = np.real(np.einsum("ij,ik,kj->j", B.conj(), S0, B))
    mu_b = np.real(np.einsum("ij,ik,kj->j", B.conj(), SG, B))
    return lam_b, mu_b, B


def _accept(S0, T, T_new, phi, predicted):
    before = _value(S0, T, phi)
    after = _value(S0, T_new, phi)
    actual = before - after
    floor = 1e-13 * max(1.0, abs(before))
    if predicted > floor and actual > floor and actual >= 0.5 * predicted:
        return actual
    return None


def _backtrack(build, S0, T, phi, t0=0.25, halvings=40):
    t = t0
    for _ in range(halvings):
        out = build(t)
        if out is not None:
            T_new, predicted = out
            actual = _accept(S0, T, T_new, phi, predicted)
            if actual is not None:
                return t, T_new, predicted, actual
        t *= 0.5
    return None


def _plane_rotation(B, i, j, t):
    """Unitary rotating ``v_i`` towards ``v_j`` by angle ``t``."""
    d = B.shape[0]
    vi, vj = B[:, i], B[:, j]
    c, s = np.cos(t), np.sin(t)
    return (np.eye(d) + (c - 1.0) * (np.outer(vi, vi.conj()) + np.outer(vj, vj.conj()))
            + s * (np.outer(vj, vi.conj()) - np.outer(vi, vj.conj())))


def strict_descent_certificate(F0_spec, G: FrameSeq, phi: ConvexFn,
                               tol: float = 1e-8) -> Optional[Certificate]:
    """Explicit descent curve at a completion violating a local-minimum condition.

    Only completions where every ``g_i`` is an eigenvector of ``S_F`` and
    ``S_F0`` commutes with ``S_G`` are examined; otherwise ``None``. Checks,
    in order: a monotone (mispaired) eigenvalue pairing, an out-of-order
    pair of blocks, and a linearly dependent block above a smaller
    eigenvalue of ``S_F``. Returns ``None`` when none applies.
    """
    _require_smooth(phi)
    T = np.asarray(G.T)
    S0 = _as_operator(F0_spec, G.dim)
    SG = T @ T.conj().T
    SF = S0 + SG
    scale = max(1.0, float(np.linalg.norm(SF, 2)))
    if np.linalg.norm(S0 @ SG - SG @ S0) > tol * scale ** 2:
        return None
    norms2 = np.sum(np.abs(T) ** 2, axis=0)
    ray = np.real(np.sum(np.conj(T) * (SF @ T), axis=0)) / norms2
    resid = np.linalg.norm(SF @ T - T * ray, axis=0)
    if np.any(resid > tol * scale * np.sqrt(norms2)):
        return None
    lam, mu, B = _joint_basis(S0, SG, tol)
    nu = lam + mu
    d = lam.size
    gap = tol * scale

    # monotone pairing: rotate the plane of two mispaired eigenvectors
    for i in range(d):
        for j in range(d):
            if lam[j] - lam[i] > gap and mu[j] - mu[i] > gap:
                def build(t, i=i, j=j):
                    U = _plane_rotation(B, i, j, t)
                    c, s = np.cos(t), np.sin(t)
                    R = np.array([[c, -s], [s, c]])
                    M = np.diag([lam[i], lam[j]]) + R @ np.diag([mu[i], mu[j]]) @ R.T
                    w = np.linalg.eigvalsh(M)
                    pred = float(np.sum(phi(np.array([nu[i], nu[j]]))) - np.sum(phi(w)))
                    return U @ T, pred
                hit = _backtrack(build, S0, T, phi, t0=np.pi / 4)
                if hit:
                    t, T_new, pred, act = hit
                    return Certificate("mispairing",
                                       f"rotate eigenvectors {i + 1} and {j + 1} "
                                       f"(lambda ascending paired with mu ascending)",
                                       t, pred, act, FrameSeq(T_new, synthesis=True))

    # out-of-order blocks: tilt the higher block towards the lower one
    for i in range(d):
        for j in range(d):
            if (i != j and mu[i] > gap and lam[j] <= lam[i] + gap
                    and mu[j] >= mu[i] - gap and nu[i] - nu[j] > 4 * gap):
                def build(t, i=i, j=j):
                    vi, vj = B[:, i], B[:, j]
                    st = np.sqrt(1.0 - t * t)
                    V = (np.eye(d) + (st - 1.0) * np.outer(vi, vi.conj())
                         + t * np.outer(vj, vi.conj()))
                    Mt = np.array([[1.0, t], [0.0, st]])
                    A = Mt @ np.diag([mu[j], mu[i]]) @ Mt.T
                    w, Y = np.linalg.eigh(A)
                    L = w[1]
                    E = L - mu[j]
                    if E > 0.5 * (nu[i] - nu[j]):
                        return None
                    x1 = Y[:, 1] * np.sign(Y[0, 1] or 1.0)
                    X = np.array([[x1[0], -x1[1]], [x1[1], x1[0]]])
                    B2 = np.stack([vj, vi], axis=1)
                    U = np.eye(d) + B2 @ (X - np.eye(2)) @ B2.conj().T
                    pred = float(phi(nu[i]) + phi(nu[j]) - phi(nu[i] - E) - phi(nu[j] + E))
                    return U.conj().T @ V @ T, pred
                hit = _backtrack(build, S0, T, phi)
                if hit:
                    t, T_new, pred, act = hit
                    return Certificate("out_of_order",
                                       f"move weight from eigenvector {i + 1} "
                                       f"(level {nu[i]:.6g}) to {j + 1} (level {nu[j]:.6g})",
                                       t, pred, act, FrameSeq(T_new, synthesis=True))

    # dependent block above a smaller eigenvalue of S_F
    wF, VF = np.linalg.eigh(SF)
    order = np.argsort(-ray, kind="stable")
    blocks, start = [], 0
    for pos in range(1, order.size + 1):
        if pos == order.size or ray[order[start]] - ray[order[pos]] > gap:
            blocks.append(order[start:pos])
            start = pos
    dphi = phi.derivative
    for blk in blocks:
        cj = float(np.mean(ray[blk]))
        if not wF[0] < cj - gap:
            continue
        Bm = T[:, blk] * np.sqrt(norms2[blk])
        _, sv, Wh = np.linalg.svd(Bm)
        sv_full = np.concatenate([sv, np.zeros(blk.size - sv.size)])
        if sv_full[-1] > gap * max(1.0, sv_full[0]):
            continue
        y = Wh.conj()[-1]
        z = np.conj(y)
        z = 0.5 * z / np.max(np.abs(z))
        h = VF[:, 0]
        c = float(wF[0])
        mass = float(np.sum(norms2[blk] * np.abs(z) ** 2))

        def build(t, blk=blk, z=z, h=h, c=c, cj=cj, mass=mass):
            T_new = T.copy()
            for zl, l in zip(z, blk):
                T_new[:, l] = (np.sqrt(1.0 - t * t * abs(zl) ** 2) * T[:, l]
                               + t * zl * np.sqrt(norms2[l]) * h)
            pred = float(t * t * mass * (dphi(cj) - dphi(c)))
            return T_new, pred
        hit = _backtrack(build, S0, T, phi)
        if hit:
            t, T_new, pred, act = hit
            return Certificate("dependent_block",
                               f"dependent vectors {[int(x) + 1 for x in blk]} at level "
                               f"{cj:.6g} leak towards eigenvalue {c:.6g}",
                               t, pred, act, FrameSeq(T_new, synthesis=True))
    return None


def descent_curve_values(F0_spec, G: FrameSeq, G_t: FrameSeq, phi: ConvexFn):
    """Potential before and after a certificate step."""
    S0 = _as_operator(F0_spec, G.dim)
    return _value(S0, np.asarray(G.T), phi), _value(S0, np.asarray(G_t.T), phi)
