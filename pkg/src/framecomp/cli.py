"""Command-line front end.

Each command reads one JSON object (a file path, or ``-`` for stdin), writes
a JSON report to stdout and a short summary to stderr.

Exit codes: 0 ok, 2 input error, 3 numerical residual or gap failure,
4 infeasible design.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from typing import Optional

import numpy as np

from .errors import DomainError, InfeasibleDesign, InternalPairingError, NoConvergence
from .fod import fod_minimum, parse_norm
from .linop import FrameSeq, optimal_completion, potential, schur_horn_design
from .optspec import optimal_spectrum
from .vecmaj import parse_phi, trace_phi
from .verify import DescentConfig, descend_orbit, descend_Ta, riemannian_grad
from .waterfill import is_feasible_pair

EXIT_OK, EXIT_INPUT, EXIT_RESIDUAL, EXIT_INFEASIBLE = 0, 2, 3, 4
RESIDUAL_TOL = 1e-6


class InputError(Exception):
    pass


def _warn(msg: str):
    print(f"warning: {msg}", file=sys.stderr)


def _complex_array(obj, what: str) -> np.ndarray:
    """Parse nested lists whose leaves are reals or ``[re, im]`` pairs."""
    def conv(x):
        if isinstance(x, (int, float)):
            return complex(x)
        if (isinstance(x, list) and len(x) == 2
                and all(isinstance(v, (int, float)) for v in x)):
            return complex(x[0], x[1])
        raise InputError(f"{what}: expected a number or [re, im], got {x!r}")
    try:
        return np.array([[conv(x) for x in row] for row in obj], dtype=complex)
    except TypeError:
        raise InputError(f"{what}: expected a list of lists")


def _encode(A) -> list:
    A = np.asarray(A)
    if A.ndim == 1:
        return [[float(z.real), float(z.imag)] for z in A]
    return [_encode(row) for row in A]


def _frame_json(F: FrameSeq) -> list:
    return [_encode(v) for v in F.vectors]


def _real_list(inst, key, required=False) -> Optional[np.ndarray]:
    if key not in inst or inst[key] is None:
        if required:
            raise InputError(f"missing field {key!r}")
        return None
    try:
        v = np.asarray(inst[key], dtype=float).reshape(-1)
    except (TypeError, ValueError):
        raise InputError(f"{key}: expected a list of numbers")
    if not np.all(np.isfinite(v)):
        raise InputError(f"{key}: non-finite entries")
    return v


class Instance:
    """Parsed problem instance with the ordering conventions enforced."""

    def __init__(self, raw: dict):
        if not isinstance(raw, dict):
            raise InputError("instance must be a JSON object")
        self.raw = raw
        self.seed = int(raw.get("seed", 0))
        self.phi = raw.get("phi")
        self.norm = raw.get("norm")
        lam = _real_list(raw, "lambda")
        frame = raw.get("frame_F0")
        S0 = raw.get("S0")
        given = [x is not None for x in (lam, frame, S0)]
        if sum(given) > 1:
            raise InputError("give at most one of lambda, frame_F0, S0")
        d = raw.get("d")
        self.S0 = None
        if lam is not None:
            if np.any(np.diff(lam) < 0):
                _warn("lambda sorted ascending")
                lam = np.sort(lam)
            if np.any(lam < 0):
                raise InputError("lambda must be non-negative")
            self.S0 = np.diag(lam).astype(complex)
        elif frame is not None:
            vecs = _complex_array(frame, "frame_F0")
            self.S0 = vecs.T @ vecs.conj()
        elif S0 is not None:
            M = _complex_array(S0, "S0")
            if M.shape[0] != M.shape[1] or np.max(np.abs(M - M.conj().T), initial=0) > 1e-9 * max(1, np.max(np.abs(M))):
                raise InputError("S0 must be a Hermitian square matrix")
            if np.linalg.eigvalsh(M)[0] < -1e-9 * max(1.0, np.max(np.abs(M))):
                raise InputError("S0 must be positive semidefinite")
            self.S0 = 0.5 * (M + M.conj().T)
        if self.S0 is not None:
            if d is not None and int(d) != self.S0.shape[0]:
                raise InputError(f"d={d} does not match the fixed part ({self.S0.shape[0]})")
            d = self.S0.shape[0]
        if d is None:
            raise InputError("dimension d is required")
        self.d = int(d)
        if self.d < 1:
            raise InputError("d must be positive")
        if self.S0 is None:
            self.S0 = np.zeros((self.d, self.d), dtype=complex)
        self.a = self._descending("a")
        self.mu = self._descending("mu")
        fg = raw.get("frame_G")
        self.G = None
        if fg is not None:
            vecs = _complex_array(fg, "frame_G")
            if vecs.shape[1] != self.d:
                raise InputError("frame_G vectors have the wrong length")
            self.G = FrameSeq(vecs.T, synthesis=True)

    def _descending(self, key):
        v = _real_list(self.raw, key)
        if v is None:
            return None
        if v.size == 0:
            raise InputError(f"{key} must be nonempty")
        if np.any(np.diff(v) > 0):
            _warn(f"{key} sorted descending")
            v = np.sort(v)[::-1]
        return v

    def need_a(self):
        if self.a is None:
            raise InputError("missing field 'a'")
        if np.any(self.a <= 0):
            raise InputError("a must be positive")
        return self.a

    @property
    def lam(self) -> np.ndarray:
        return np.clip(np.linalg.eigvalsh(self.S0), 0.0, None)


def _load(path: str) -> Instance:
    try:
        if path == "-":
            raw = json.load(sys.stdin)
        else:
            with open(path) as fh:
                raw = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc.msg} (line {exc.lineno})")
    return Instance(raw)


def _phi_of(args, inst):
    return parse_phi(args.phi or inst.phi or "square")


def _emit(report: dict, summary: str, args):
    json.dump(report, sys.stdout)
    sys.stdout.write("\n")
    if not args.json:
        print(summary, file=sys.stderr)


def _safe_trace_phi(x, phi):
    try:
        return trace_phi(x, phi)
    except DomainError:
        return None


def cmd_spectrum(inst: Instance, args) -> int:
    a = inst.need_a()
    lam = inst.lam
    spec = optimal_spectrum(lam, a)
    rep = is_feasible_pair(lam, a)
    phi = _phi_of(args, inst)
    out = {
        "lambda": lam.tolist(),
        "nu_op": spec.sorted.tolist(),
        "nu_op_layout": spec.nu_op.tolist(),
        "s_star": spec.s_star,
        "s_indices": list(spec.s_indices),
        "c_consts": list(spec.c_consts),
        "q": spec.q,
        "feasible": rep.feasible,
        "violated_prefix": rep.violated_prefix,
        "mu_bound": rep.mu.tolist(),
        "potential": {phi.name: _safe_trace_phi(spec.nu_op.values, phi)},
    }
    _emit(out, f"nu_op = {spec.sorted.tolist()}  s* = {spec.s_star}  "
               f"feasible = {rep.feasible}", args)
    return EXIT_OK


def cmd_complete(inst: Instance, args) -> int:
    a = inst.need_a()
    G, spec = optimal_completion(inst.S0, a)
    SF = inst.S0 + G.T @ G.T.conj().T
    achieved = np.linalg.eigvalsh(SF)[::-1]
    resid = float(np.max(np.abs(achieved - spec.sorted.values)))
    norm_err = float(np.max(np.abs(G.norm_squares() - a)))
    w, V = np.linalg.eigh(inst.S0)
    F0_vecs = (V * np.sqrt(np.clip(w, 0.0, None))).T
    F0_vecs = [v for v, wi in zip(F0_vecs, w) if wi > 0]
    full = FrameSeq(list(F0_vecs) + G.vectors, dim=inst.d)
    out = {
        "nu_op": spec.sorted.tolist(),
        "spectrum": achieved.tolist(),
        "residual": resid,
        "norm_error": norm_err,
        "frame_G": _frame_json(G),
        "frame_F": _frame_json(full),
    }
    _emit(out, f"spectrum = {achieved.tolist()}  residual = {resid:.3g}", args)
    return EXIT_RESIDUAL if max(resid, norm_err) > RESIDUAL_TOL else EXIT_OK


def cmd_fod(inst: Instance, args) -> int:
    a = inst.need_a()
    norms = args.norm or ([inst.norm] if inst.norm else ["fro"])
    results = {}
    worst = 0.0
    sol = None
    for spec in norms:
        sol = fod_minimum(inst.S0, a, parse_norm(spec))
        results[sol.norm.name] = {"min_value": sol.min_value,
                                  "achieved_value": sol.achieved_value}
        worst = max(worst, abs(sol.achieved_value - sol.min_value)
                    / max(1.0, sol.min_value))
    out = {
        "delta": sorted(sol.delta.tolist(), reverse=True),
        "norms": results,
        "frame_G": _frame_json(sol.G_op),
        "commutator": sol.commutator,
    }
    _emit(out, "  ".join(f"{k}: {v['min_value']:.10g}" for k, v in results.items()), args)
    return EXIT_RESIDUAL if worst > RESIDUAL_TOL else EXIT_OK


def cmd_verify(inst: Instance, args) -> int:
    phi = _phi_of(args, inst)
    cfg = DescentConfig(restarts=args.restarts, seed=args.seed if args.seed is not None else inst.seed,
                        max_iters=args.max_iters, workers=args.workers,
                        record_trajectory=args.trajectories is not None)
    if args.orbit:
        if inst.mu is None:
            raise InputError("orbit mode needs 'mu'")
        if inst.mu.size != inst.d:
            raise InputError("mu must have length d")
        rep = descend_orbit(inst.S0, inst.mu, phi, cfg)
    else:
        rep = descend_Ta(inst.S0, inst.need_a(), phi, cfg)
    bound = args.gap_tol * max(1.0, abs(rep.global_value))
    conv = [r for r in rep.restarts if r.converged]
    max_gap = max((r.gap for r in conv), default=float("nan"))
    passed = bool(conv) and max_gap <= bound
    if args.trajectories:
        with open(args.trajectories, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["restart", "iter", "value"])
            for r in rep.restarts:
                for it, val in r.trajectory or []:
                    w.writerow([r.index, it, repr(val)])
    out = {
        "global_value": rep.global_value,
        "final_values": [r.final_value for r in rep.restarts],
        "iters": [r.iters for r in rep.restarts],
        "converged": [r.converged for r in rep.restarts],
        "max_gap": max_gap,
        "gap_tol": args.gap_tol,
        "pass": passed,
    }
    _emit(out, f"global = {rep.global_value:.10g}  max gap = {max_gap:.3g}  "
               f"converged {len(conv)}/{len(rep.restarts)}  {'PASS' if passed else 'FAIL'}",
          args)
    return EXIT_OK if passed else EXIT_RESIDUAL


def cmd_design(inst: Instance, args) -> int:
    a = inst.need_a()
    if inst.mu is None:
        raise InputError("design needs 'mu'")
    if inst.mu.size != inst.d:
        raise InputError("mu must have length d")
    try:
        G = schur_horn_design(inst.mu, a)
    except InfeasibleDesign as exc:
        json.dump({"error": "infeasible", "violated_prefix": exc.violated_prefix}, sys.stdout)
        sys.stdout.write("\n")
        print(f"infeasible design: {exc} (prefix {exc.violated_prefix})", file=sys.stderr)
        return EXIT_INFEASIBLE
    spec = np.linalg.eigvalsh(G.T @ G.T.conj().T)[::-1]
    out = {"frame_G": _frame_json(G), "spectrum": spec.tolist(),
           "norms": G.norm_squares().tolist()}
    _emit(out, f"designed {len(G)} vectors, spectrum = {spec.tolist()}", args)
    return EXIT_OK


def cmd_potential(inst: Instance, args) -> int:
    phi = _phi_of(args, inst)
    G = inst.G if inst.G is not None else FrameSeq([], dim=inst.d)
    SF = inst.S0 + G.T @ G.T.conj().T
    spec = np.linalg.eigvalsh(SF)[::-1]
    value = potential(inst.S0, G, phi)
    out = {"spectrum": spec.tolist(), "potential": {phi.name: value}}
    if len(G):
        out["grad_norm"] = float(np.linalg.norm(riemannian_grad(inst.S0, G, phi)))
    _emit(out, f"{phi.name} potential = {value:.12g}", args)
    return EXIT_OK


COMMANDS = {
    "spectrum": cmd_spectrum,
    "complete": cmd_complete,
    "fod": cmd_fod,
    "verify": cmd_verify,
    "design": cmd_design,
    "potential": cmd_potential,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="framecomp",
                                description="Optimal frame completions with prescribed norms.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("instance", help="JSON instance file, or - for stdin")
    p.add_argument("--phi", help="square | mse | exp | p:<p>")
    p.add_argument("--norm", action="append",
                   help="fro | spec | schatten:<p> | kyfan:<j> (repeatable)")
    p.add_argument("--seed", type=int)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--max-iters", type=int, default=5000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--gap-tol", type=float, default=1e-5)
    p.add_argument("--trajectories", metavar="PATH", help="write (restart, iter, value) CSV")
    p.add_argument("--orbit", action="store_true", help="verify: descend on the unitary orbit of mu")
    p.add_argument("--json", action="store_true", help="suppress the stderr summary")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        inst = _load(args.instance)
        return COMMANDS[args.command](inst, args)
    except (NoConvergence, InternalPairingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESIDUAL
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
