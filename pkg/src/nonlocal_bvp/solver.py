"""Shooting solver over ``ker L`` (initial values), with λ-continuation and regularization."""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from . import expr as _expr
from .coincidence import Problem, coincidence_residual, shooting_batch
from .measure import BVComponent, jump_at_zero_vector, stieltjes
from .newton import damped_newton, dedupe
from .ode import Trajectory, VectorField, integrate
from .sampling import cube_grid

__all__ = [
    "SolverConfig", "Solution", "NoSolutionFound", "RegularizationFailed", "RegularizationResult",
    "solve_direct", "build_regularized", "solve_with_regularization", "validate",
    "ODE_RESIDUAL_TOL", "BOUNDARY_RESIDUAL_TOL",
]

log = logging.getLogger(__name__)

ODE_RESIDUAL_TOL = 1e-5
BOUNDARY_RESIDUAL_TOL = 1e-7
BALL_SLACK = 1e-6
DEDUPE_DIST = 1e-6
FD_STEP = 1e-7
# Newton rows that stall above newton_tol are still kept below this residual
STALL_ACCEPT = 1e-9
CHUNK = 512


@dataclass(frozen=True)
class SolverConfig:
    steps: int = 1000
    seed_grid_per_axis: int = 9
    newton_max_iter: int = 50
    newton_tol: float = 1e-10
    lambda_schedule: tuple = (0.1, 0.3, 0.6, 1.0)
    reg_schedule: tuple = (4, 8, 16, 32, 64, 128)
    cauchy_tol: float = 1e-6
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "lambda_schedule", tuple(float(v) for v in self.lambda_schedule))
        object.__setattr__(self, "reg_schedule", tuple(int(v) for v in self.reg_schedule))
        if self.steps < 2 or self.seed_grid_per_axis < 1 or self.newton_max_iter < 1:
            raise ValueError("steps >= 2, seed_grid_per_axis >= 1, newton_max_iter >= 1 required")
        if not (self.newton_tol > 0 and self.cauchy_tol > 0):
            raise ValueError("tolerances must be positive")
        lam = self.lambda_schedule
        if not lam or lam[-1] != 1.0 or any(b <= a for a, b in zip(lam, lam[1:])) or lam[0] <= 0:
            raise ValueError("lambda_schedule must increase within (0, 1] and end at 1")
        if not self.reg_schedule or any(n < 1 for n in self.reg_schedule):
            raise ValueError("reg_schedule entries must be positive integers")
        if self.workers < 0:
            raise ValueError("workers must be >= 0 (0 = automatic)")

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown solver options {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return {
            "steps": self.steps, "seed_grid_per_axis": self.seed_grid_per_axis,
            "newton_max_iter": self.newton_max_iter, "newton_tol": self.newton_tol,
            "lambda_schedule": list(self.lambda_schedule), "reg_schedule": list(self.reg_schedule),
            "cauchy_tol": self.cauchy_tol, "workers": self.workers,
        }


@dataclass(frozen=True)
class Solution:
    c: np.ndarray
    lam: float
    trajectory: Trajectory
    ode_residual: float
    boundary_residual_norm: float
    sup_norm: float
    coincidence_residual: float

    @property
    def valid(self) -> bool:
        return self.ode_residual <= ODE_RESIDUAL_TOL and self.boundary_residual_norm <= BOUNDARY_RESIDUAL_TOL

    def to_dict(self) -> dict:
        return {
            "c": [float(v) for v in self.c],
            "lambda": float(self.lam),
            "ode_residual": float(self.ode_residual),
            "boundary_residual_norm": float(self.boundary_residual_norm),
            "coincidence_residual": float(self.coincidence_residual),
            "sup_norm": float(self.sup_norm),
            "steps": self.trajectory.steps,
        }


class NoSolutionFound(RuntimeError):
    def __init__(self, message: str, best_residual: float, best_seed, escaped: int, rejected: int = 0):
        super().__init__(message)
        self.best_residual = float(best_residual)
        self.best_seed = None if best_seed is None else [float(v) for v in best_seed]
        self.escaped = int(escaped)
        self.rejected = int(rejected)

    def to_dict(self) -> dict:
        return {"error": "no-solution-found", "message": str(self), "best_residual": self.best_residual,
                "best_seed": self.best_seed, "escaped": self.escaped, "rejected": self.rejected}


class RegularizationFailed(RuntimeError):
    def __init__(self, message: str, gaps: Sequence[float], schedule: Sequence[int]):
        super().__init__(message)
        self.gaps = [float(g) for g in gaps]
        self.schedule = list(schedule)

    def to_dict(self) -> dict:
        return {"error": "regularization-failed", "message": str(self), "gaps": self.gaps,
                "schedule": self.schedule}


# ---------------------------------------------------------------------------
# residuals

def _derivative(v: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order finite differences at interior nodes 1..N-1.

    Five-point central stencils inside, fourth-order one-sided stencils at the
    two nodes next to the endpoints; three-point stencils are used below 4
    intervals.
    """
    n = len(v) - 1
    if n < 4:
        return (v[2:] - v[:-2]) / (2.0 * h)
    d = np.empty_like(v[1:-1])
    d[1:-1] = (v[:-4] - 8.0 * v[1:-3] + 8.0 * v[3:-1] - v[4:]) / (12.0 * h)
    d[0] = (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) / (12.0 * h)
    d[-1] = (3.0 * v[n] + 10.0 * v[n - 1] - 18.0 * v[n - 2] + 6.0 * v[n - 3] - v[n - 4]) / (12.0 * h)
    return d


def _ode_residual(x: Trajectory, f: VectorField) -> float:
    deriv = _derivative(x.values, 1.0 / x.steps)
    fvals = f(x.grid[1:-1], x.values[1:-1].T).T
    return float(np.max(np.linalg.norm(deriv - fvals, axis=1)))


def validate(s: Solution | Trajectory, p: Problem) -> dict:
    """Residual report for a trajectory against ``p``.

    ``ode_residual`` is the largest defect ``|x' - f(t, x)|`` over interior
    nodes with ``x'`` from fourth-order differences; its floor for exact
    solutions is of order ``(1/N)^4 |x^(5)|``.
    """
    x = s.trajectory if isinstance(s, Solution) else s
    with np.errstate(all="ignore"):
        br = p.h.rows(stieltjes(x, p.g))[0]
    return {
        "ode_residual": _ode_residual(x, p.f),
        "boundary_residual_norm": float(np.linalg.norm(br)),
        "coincidence_residual": coincidence_residual(x, p),
        "sup_norm": x.sup_norm(),
    }


def _make_solution(p: Problem, c: np.ndarray, lam: float, steps: int) -> Solution:
    x = integrate(p.f, c, lam, steps)
    report = validate(x, p)
    return Solution(np.array(c, dtype=float), lam, x, report["ode_residual"],
                    report["boundary_residual_norm"], report["sup_norm"], report["coincidence_residual"])


# ---------------------------------------------------------------------------
# multi-start Newton

def _workers(cfg: SolverConfig) -> int:
    if cfg.workers:
        return cfg.workers
    return max(1, min(4, os.cpu_count() or 1))


def _newton_from(p: Problem, seeds: np.ndarray, lam: float, cfg: SolverConfig):
    def F(c):
        return shooting_batch(p, c, lam, cfg.steps)[0]

    def run(chunk):
        return damped_newton(F, chunk, tol=cfg.newton_tol, max_iter=cfg.newton_max_iter, step=FD_STEP)

    chunks = [seeds[i:i + CHUNK] for i in range(0, len(seeds), CHUNK)]
    workers = _workers(cfg)
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, chunks))  # map keeps seed order
    else:
        results = [run(ch) for ch in chunks]
    x = np.vstack([r.x for r in results])
    nrm = np.concatenate([r.norm for r in results])
    ok = np.concatenate([r.converged for r in results]) | (nrm <= STALL_ACCEPT)
    return x, nrm, ok


def _escaped_count(p: Problem, seeds: np.ndarray, lam: float, steps: int) -> int:
    _, _, escaped_at = shooting_batch(p, seeds, lam, steps)
    return int(np.sum(np.isfinite(escaped_at)))


def solve_direct(p: Problem, R: float, cfg: SolverConfig | None = None,
                 seeds: Optional[np.ndarray] = None) -> list[Solution]:
    """All distinct roots of ``S_1`` reached from the seed grid on ``[-R, R]^k``.

    Falls back to λ-continuation along ``cfg.lambda_schedule`` when no seed
    converges at λ = 1. Roots whose trajectory leaves ``B(0, R)`` or fails the
    residual thresholds are dropped.

    Raises:
        NoSolutionFound: nothing survived; reports the best residual, its seed
            and how many seed trajectories escaped.
    """
    cfg = cfg or SolverConfig()
    if not R > 0:
        raise ValueError("R must be positive")
    if seeds is None:
        seeds = cube_grid(p.k, cfg.seed_grid_per_axis, R)
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))

    x, nrm, ok = _newton_from(p, seeds, 1.0, cfg)
    if not ok.any():
        log.info("no seed converged at lambda=1; continuing in lambda")
        starts = seeds
        for lam in cfg.lambda_schedule:
            xl, nl, okl = _newton_from(p, starts, lam, cfg)
            if not okl.any():
                break
            starts = xl[okl]
            if lam == 1.0:
                x, nrm, ok = xl, nl, okl
    finite = np.where(np.isfinite(nrm), nrm, np.inf)
    best = int(np.argmin(finite)) if len(finite) else None

    roots = x[ok]
    solutions: list[Solution] = []
    rejected = 0
    for i in dedupe(roots, DEDUPE_DIST) if len(roots) else []:
        try:
            sol = _make_solution(p, roots[i], 1.0, cfg.steps)
        except Exception as exc:  # root sits on a trajectory that cannot be re-integrated
            log.info("discarding root %s: %s", roots[i], exc)
            rejected += 1
            continue
        if sol.sup_norm > R + BALL_SLACK or not sol.valid:
            rejected += 1
            continue
        solutions.append(sol)
    if not solutions:
        escaped = _escaped_count(p, seeds, 1.0, cfg.steps)
        best_seed = None if best is None else (seeds[best] if len(seeds) == len(finite) else x[best])
        raise NoSolutionFound(
            f"no solution inside the ball of radius {R} ({len(roots)} converged, {rejected} rejected)",
            float(finite[best]) if best is not None else math.inf, best_seed, escaped, rejected)
    return solutions


# ---------------------------------------------------------------------------
# regularization

def build_regularized(p: Problem, n: int) -> Problem:
    """``f_n = f - x/n`` and ``g_n`` with the largest jump at 0 enlarged by ``1/n``.

    The modified component ``j0`` is the first index maximising ``|Δ0^j|``;
    its value at 0 moves by ``-(1/n) sgn(Δ0^{j0})``.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    jumps = jump_at_zero_vector(p.g)
    if not np.any(jumps != 0.0):
        raise ValueError("regularization needs a nonzero jump at 0")
    j0 = int(np.argmax(np.abs(jumps)))
    inv_n = 1.0 / n
    f = VectorField(tuple(
        _expr.BinOp("-", e, _expr.BinOp("/", _expr.Var(f"x{i + 1}"), _expr.Num(float(n))))
        for i, e in enumerate(p.f.exprs)))
    comp = p.g.components[j0]
    sign = math.copysign(1.0, comp.jump0)
    new_comp = BVComponent(jump0=sign * (abs(comp.jump0) + inv_n), atoms=comp.atoms,
                           jump1=comp.jump1, density=comp.density)
    return Problem(f, p.g.replace_component(j0, new_comp), p.h, p.split)


@dataclass
class RegularizationResult:
    solution: Solution
    schedule: list            # n values actually used
    gaps: list                # sup-norm gaps between consecutive regularized trajectories
    c_sequence: list          # regularized roots, one per schedule entry
    standing_strict: list     # strictness of the standing inequality for each g_n
    regime: str

    def to_dict(self) -> dict:
        return {
            "schedule": list(self.schedule),
            "gaps": [float(g) for g in self.gaps],
            "c_sequence": [[float(v) for v in c] for c in self.c_sequence],
            "standing_strict": list(self.standing_strict),
            "regime": self.regime,
            "solution": self.solution.to_dict(),
        }


def _polish(p: Problem, c0: np.ndarray, R: float, cfg: SolverConfig) -> Optional[Solution]:
    try:
        sols = solve_direct(p, R, replace(cfg, lambda_schedule=(1.0,)), seeds=np.atleast_2d(c0))
    except NoSolutionFound:
        return None
    return sols[0]


def _regime(p: Problem, R: float) -> str:
    from .certifier import check_inward, standing_assumptions
    standing = standing_assumptions(p.g)
    return "strict" if standing.strict and check_inward(p.f, R).strict else "boundary"


def solve_with_regularization(p: Problem, R: float, cfg: SolverConfig | None = None,
                              regime: Optional[str] = None) -> RegularizationResult:
    """Follow the regularized problems ``(f - x/n, g_n)`` along ``cfg.reg_schedule``.

    Each entry is solved warm-started from the previous root and the sup-norm
    gaps between consecutive trajectories are recorded. The limit is then
    pinned down by Newton on the original shooting map started from the last
    regularized root, and accepted only if it is consistent with the
    sequence: either a gap fell below ``cauchy_tol``, or it lies within twice
    the geometric tail bound ``gap · q / (1 - q)`` of the last iterate.
    In the strict regime the original problem is directly solvable, so the
    loop also stops once two consecutive polished roots agree.

    Raises:
        RegularizationFailed: no root at some entry, gaps not contracting, or
            the polished limit is inconsistent with the sequence.
    """
    from .certifier import standing_assumptions

    cfg = cfg or SolverConfig()
    regime = regime or _regime(p, R)
    gaps: list[float] = []
    used: list[int] = []
    cs: list[np.ndarray] = []
    strict_flags: list[bool] = []
    prev_traj: Optional[Trajectory] = None
    prev_polished: Optional[Solution] = None
    polished: Optional[Solution] = None
    converged = False
    for n in cfg.reg_schedule:
        pn = build_regularized(p, n)
        strict_flags.append(standing_assumptions(pn.g).strict)
        try:
            if cs:
                try:
                    sols = solve_direct(pn, R, cfg, seeds=np.atleast_2d(cs[-1]))
                except NoSolutionFound:
                    sols = solve_direct(pn, R, cfg)
            else:
                sols = solve_direct(pn, R, cfg)
        except NoSolutionFound as exc:
            raise RegularizationFailed(f"no solution of the regularized problem n={n}: {exc}", gaps, used) from exc
        if cs:
            # stay on the branch being followed
            sols.sort(key=lambda s: float(np.linalg.norm(s.c - cs[-1])))
        sol = sols[0]
        used.append(n)
        cs.append(sol.c)
        if prev_traj is not None:
            gaps.append(sol.trajectory.distance(prev_traj))
        prev_traj = sol.trajectory
        if gaps and gaps[-1] < cfg.cauchy_tol:
            converged = True
            polished = _polish(p, sol.c, R, cfg)
            break
        if regime == "strict":
            polished = _polish(p, sol.c, R, cfg)
            if (polished is not None and prev_polished is not None
                    and polished.trajectory.distance(prev_polished.trajectory) < cfg.cauchy_tol):
                converged = True
                break
            prev_polished = polished

    if polished is None or not converged:
        polished = polished if converged else _polish(p, cs[-1], R, cfg)
    if polished is None:
        raise RegularizationFailed("Newton on the original problem did not converge from the regularized limit",
                                   gaps, used)
    if not converged:
        if len(gaps) < 2:
            raise RegularizationFailed("too few schedule entries to judge convergence", gaps, used)
        q = gaps[-1] / gaps[-2] if gaps[-2] > 0 else 0.0
        if not q < 1.0:
            raise RegularizationFailed(f"regularized trajectories are not contracting (ratio {q:.3g})", gaps, used)
        tail = gaps[-1] * q / (1.0 - q)
        dist = polished.trajectory.distance(prev_traj)
        if dist > 2.0 * tail + cfg.cauchy_tol:
            raise RegularizationFailed(
                f"polished root is {dist:.3e} from the last iterate, beyond the tail bound {tail:.3e}", gaps, used)
    if not polished.valid:
        raise RegularizationFailed("limit fails validation on the original problem", gaps, used)
    return RegularizationResult(polished, used, gaps, cs, strict_flags, regime)
