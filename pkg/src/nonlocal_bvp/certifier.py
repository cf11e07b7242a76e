"""Sampling checks of the existence hypotheses for a radius ``R``.

The hypotheses, for ``Δ0 = g(0+) - g(0)`` and ``V = lim var(g, [ε, 1])``:

* standing: ``Δ0 ≠ 0`` and ``V <= min_j |Δ0^j|``
* (i)  ``<f(t, x), x> <= 0`` for ``t`` in (0, 1] and ``|x| = R``
* (ii) ``h(x) ≠ 0`` for ``r- < |x| <= r+`` and ``deg(h, B(0, r), 0) ≠ 0`` for
  some ``r`` in ``(r-, r+]``, where ``r- = R (min_j |Δ0^j| - V)`` and
  ``r+ = R (|Δ0| + V)``.

Everything here samples finitely many points, so a passing certificate is
"certified-by-sampling", never a proof.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from . import expr as _expr
from .coincidence import Problem
from .degree import BoundaryMap, DegreeError, DegreeResult, degree, product_degree
from .measure import (BVFunction, head_variation, jump_at_one_vector, jump_at_zero_vector,
                      tail_variation)
from .ode import VectorField
from .problems import time_reverse
from .sampling import sphere_points

__all__ = [
    "StandingReport", "InwardCheck", "AnnulusCheck", "ExistenceCertificate", "CertifyConfig",
    "standing_assumptions", "r_bounds", "check_inward", "check_h_annulus",
    "certify", "certify_endpoint1", "CERTIFIED", "FAILED",
]

STANDING_TOL = 1e-12
STRICT_TOL = 1e-9
H_NONZERO_TOL = 1e-9

CERTIFIED = "certified-by-sampling"
FAILED = "failed"


@dataclass(frozen=True)
class StandingReport:
    ok: bool
    jump0_norm: float
    min_jump0: float
    tail_variation: float
    strict: bool

    def to_dict(self) -> dict:
        return {
            "ok": self.ok, "jump0_norm": self.jump0_norm, "min_jump0": self.min_jump0,
            "tail_variation": self.tail_variation, "strict": self.strict,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StandingReport":
        return cls(bool(d["ok"]), float(d["jump0_norm"]), float(d["min_jump0"]),
                   float(d["tail_variation"]), bool(d["strict"]))


@dataclass(frozen=True)
class InwardCheck:
    samples: int
    max_inner_product: float
    strict: bool
    witness: Optional[dict] = None  # worst (t, x) sample

    @property
    def passed(self) -> bool:
        return self.max_inner_product <= 0.0

    def to_dict(self) -> dict:
        return {"samples": self.samples, "max_inner_product": self.max_inner_product,
                "strict": self.strict, "witness": self.witness}

    @classmethod
    def from_dict(cls, d: dict) -> "InwardCheck":
        return cls(int(d["samples"]), float(d["max_inner_product"]), bool(d["strict"]), d.get("witness"))


@dataclass(frozen=True)
class AnnulusCheck:
    samples: int
    min_h_norm: float
    witness: Optional[dict] = None

    @property
    def passed(self) -> bool:
        return self.min_h_norm > H_NONZERO_TOL

    def to_dict(self) -> dict:
        return {"samples": self.samples, "min_h_norm": self.min_h_norm, "witness": self.witness}

    @classmethod
    def from_dict(cls, d: dict) -> "AnnulusCheck":
        return cls(int(d["samples"]), float(d["min_h_norm"]), d.get("witness"))


@dataclass(frozen=True)
class CertifyConfig:
    n_t: int = 64
    n_x: int = 256
    n_annulus: int = 64
    r: Optional[float] = None  # degree radius; defaults to r+
    use_product_degree: bool = True


@dataclass(frozen=True)
class ExistenceCertificate:
    R: float
    r_minus: float
    r_plus: float
    chosen_r: float
    degree: Optional[DegreeResult]
    standing_ok: bool
    standing: StandingReport
    cond_i: InwardCheck
    cond_ii: AnnulusCheck
    regime: str          # "strict" or "boundary"
    status: str          # CERTIFIED or FAILED
    witness: Optional[dict] = None
    endpoint: int = 0    # 0: hypotheses at t = 0; 1: mirrored hypotheses at t = 1

    @property
    def certified(self) -> bool:
        return self.status == CERTIFIED

    def to_dict(self) -> dict:
        return {
            "R": self.R,
            "r_minus": self.r_minus,
            "r_plus": self.r_plus,
            "chosen_r": self.chosen_r,
            "degree": None if self.degree is None else self.degree.to_dict(),
            "standing_ok": self.standing_ok,
            "standing": self.standing.to_dict(),
            "cond_i": self.cond_i.to_dict(),
            "cond_ii": self.cond_ii.to_dict(),
            "regime": self.regime,
            "status": self.status,
            "witness": self.witness,
            "endpoint": self.endpoint,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExistenceCertificate":
        return cls(
            R=float(d["R"]), r_minus=float(d["r_minus"]), r_plus=float(d["r_plus"]),
            chosen_r=float(d["chosen_r"]),
            degree=None if d.get("degree") is None else DegreeResult.from_dict(d["degree"]),
            standing_ok=bool(d["standing_ok"]),
            standing=StandingReport.from_dict(d["standing"]),
            cond_i=InwardCheck.from_dict(d["cond_i"]),
            cond_ii=AnnulusCheck.from_dict(d["cond_ii"]),
            regime=str(d["regime"]), status=str(d["status"]),
            witness=d.get("witness"), endpoint=int(d.get("endpoint", 0)),
        )


def standing_assumptions(g: BVFunction) -> StandingReport:
    jumps = np.abs(jump_at_zero_vector(g))
    tail = tail_variation(g)
    min_jump = float(np.min(jumps))
    ok = bool(np.any(jumps != 0.0)) and tail <= min_jump + STANDING_TOL
    return StandingReport(
        ok=ok,
        jump0_norm=float(np.linalg.norm(jumps)),
        min_jump0=min_jump,
        tail_variation=tail,
        strict=ok and tail < min_jump - STANDING_TOL,
    )


def _r_bounds_from(min_jump: float, jump_norm: float, variation: float, R: float) -> tuple[float, float]:
    return R * (min_jump - variation), R * (jump_norm + variation)


def r_bounds(g: BVFunction, R: float) -> tuple[float, float]:
    """``(r-, r+) = (R (min_j |Δ0^j| - V), R (|Δ0| + V))``."""
    if not R > 0:
        raise ValueError("R must be positive")
    jumps = np.abs(jump_at_zero_vector(g))
    return _r_bounds_from(float(np.min(jumps)), float(np.linalg.norm(jumps)), tail_variation(g), R)


def _as_list(v) -> list:
    return [float(x) for x in np.atleast_1d(v)]


def check_inward(f: VectorField, R: float, n_t: int = 64, n_x: int = 256,
                 witnesses: Sequence[dict] = ()) -> InwardCheck:
    """Maximum of ``<f(t, x), x>`` over ``t = i/n_t`` (i = 1..n_t) and ``n_x`` points of ``|x| = R``.

    ``witnesses`` (records from an earlier failing run) are always re-sampled.
    """
    if n_t < 1 or n_x < 1:
        raise ValueError("sample counts must be positive")
    ts = np.arange(1, n_t + 1) / n_t
    xs = sphere_points(f.k, n_x, R)
    T = np.repeat(ts, len(xs))
    X = np.tile(xs, (len(ts), 1))
    if witnesses:
        T = np.concatenate([T, [w["t"] for w in witnesses]])
        X = np.vstack([X, [w["x"] for w in witnesses]])
    F = f(T, X.T).T
    ip = np.einsum("mk,mk->m", F, X)
    if not np.all(np.isfinite(ip)):
        i = int(np.flatnonzero(~np.isfinite(ip))[0])
        f.evaluate(T[i], X[i])  # raises with the domain error
        raise ValueError(f"f is not finite at t={T[i]}, x={X[i].tolist()}")
    i = int(np.argmax(ip))
    worst = float(ip[i])
    witness = {"t": float(T[i]), "x": _as_list(X[i]), "inner_product": worst}
    return InwardCheck(len(ip), worst, worst < -STRICT_TOL, witness)


def check_h_annulus(h: BoundaryMap, r_minus: float, r_plus: float, n: int = 64,
                    witnesses: Sequence[dict] = ()) -> AnnulusCheck:
    """Minimum of ``|h|`` over radii ``r- + (r+ - r-) i/n`` (i = 1..n) times ``n`` sphere directions.

    An empty annulus (``r- >= r+``) passes vacuously with ``min_h_norm = inf``.
    """
    if n < 1:
        raise ValueError("sample count must be positive")
    pts = []
    if r_plus > r_minus:
        radii = r_minus + (r_plus - r_minus) * np.arange(1, n + 1) / n
        radii = radii[radii > 0]
        dirs = sphere_points(h.k, n, 1.0)
        pts.append((radii[:, None, None] * dirs[None, :, :]).reshape(-1, h.k))
    if witnesses:
        pts.append(np.array([w["u"] for w in witnesses], dtype=float))
    if not pts:
        return AnnulusCheck(0, float("inf"), None)
    P = np.vstack(pts)
    H = h.rows(P)
    norms = np.linalg.norm(H, axis=1)
    if not np.all(np.isfinite(norms)):
        i = int(np.flatnonzero(~np.isfinite(norms))[0])
        h.evaluate(P[i])
        raise ValueError(f"h is not finite at u={P[i].tolist()}")
    i = int(np.argmin(norms))
    witness = {"u": _as_list(P[i]), "h_norm": float(norms[i])}
    return AnnulusCheck(len(P), float(norms[i]), witness)


def _split_maps(p: Problem) -> tuple[BoundaryMap, BoundaryMap]:
    s = p.split
    h1 = BoundaryMap(p.h.exprs[:s])
    # the second block reads u_{s+1}..u_k; shift it down to u1..u_{k-s}
    shifted = {f"u{s + i}": f"u{i}" for i in range(1, p.k - s + 1)}
    h2 = BoundaryMap(tuple(_rename(e, shifted) for e in p.h.exprs[s:]))
    return h1, h2


def _rename(e, mapping: dict):
    return _expr.substitute(e, {a: _expr.Var(b) for a, b in mapping.items()})


def _degree_for(p: Problem, r: float, cfg: CertifyConfig) -> DegreeResult:
    if cfg.use_product_degree and p.split is not None and p.split * 2 == p.k:
        h1, h2 = _split_maps(p)
        return product_degree(h1, h2, r)
    return degree(p.h, r)


def _choose_r(r_minus: float, r_plus: float, requested: Optional[float]) -> float:
    if requested is None:
        return r_plus
    if r_minus < r_plus and not (r_minus < requested <= r_plus):
        raise ValueError(f"degree radius {requested} outside ({r_minus}, {r_plus}]")
    if r_minus >= r_plus and requested != r_plus:
        raise ValueError(f"degenerate interval: degree radius must be r+ = {r_plus}")
    return float(requested)


def _assemble(R, r_minus, r_plus, standing, cond_i, cond_ii, p, cfg, endpoint=0) -> ExistenceCertificate:
    chosen_r = _choose_r(r_minus, r_plus, cfg.r)
    witness = None
    deg = None
    if not standing.ok:
        witness = {"condition": "standing", "min_jump0": standing.min_jump0,
                   "tail_variation": standing.tail_variation}
    elif not cond_i.passed:
        witness = {"condition": "cond_i", **cond_i.witness}
    elif not cond_ii.passed:
        witness = {"condition": "cond_ii", **cond_ii.witness}
    if chosen_r > 0:
        try:
            deg = _degree_for(p, chosen_r, cfg)
        except DegreeError as exc:
            if witness is None:
                witness = {"condition": "degree", "message": str(exc)}
    elif witness is None:
        witness = {"condition": "degree", "message": "r+ is not positive"}
    if witness is None and deg is not None and deg.value == 0:
        witness = {"condition": "degree", "message": f"degree vanishes at r = {chosen_r}"}
    status = CERTIFIED if witness is None else FAILED
    regime = "strict" if standing.strict and cond_i.strict else "boundary"
    return ExistenceCertificate(
        R=float(R), r_minus=float(r_minus), r_plus=float(r_plus), chosen_r=chosen_r,
        degree=deg, standing_ok=standing.ok, standing=standing, cond_i=cond_i, cond_ii=cond_ii,
        regime=regime, status=status, witness=witness, endpoint=endpoint,
    )


def certify(p: Problem, R: float, cfg: CertifyConfig | None = None) -> ExistenceCertificate:
    """Check every hypothesis at radius ``R``; failures are recorded in the certificate, not raised."""
    cfg = cfg or CertifyConfig()
    if not R > 0:
        raise ValueError("R must be positive")
    standing = standing_assumptions(p.g)
    r_minus, r_plus = _r_bounds_from(standing.min_jump0, standing.jump0_norm, standing.tail_variation, R)
    cond_i = check_inward(p.f, R, cfg.n_t, cfg.n_x)
    cond_ii = check_h_annulus(p.h, r_minus, r_plus, cfg.n_annulus)
    return _assemble(R, r_minus, r_plus, standing, cond_i, cond_ii, p, cfg)


def certify_endpoint1(p: Problem, R: float, cfg: CertifyConfig | None = None) -> ExistenceCertificate:
    """Mirrored hypotheses at ``t = 1``: ``<f, x> >= 0`` on ``[0, 1)`` and the jump at 1.

    Evaluated on the time-reversed problem; radii come straight from the jump
    at 1 and ``lim var(g, [0, 1-ε])``. ``cond_i`` holds the samples of
    ``<-f(t, x), x>``; witness times refer to the original time axis.
    """
    cfg = cfg or CertifyConfig()
    cert = certify(time_reverse(p), R, cfg)
    jumps = np.abs(jump_at_one_vector(p.g))
    r_minus, r_plus = _r_bounds_from(float(np.min(jumps)), float(np.linalg.norm(jumps)), head_variation(p.g), R)
    cond_i = cert.cond_i
    if cond_i.witness is not None:
        w = dict(cond_i.witness)
        w["t"] = 1.0 - w["t"]
        cond_i = replace(cond_i, witness=w)
    witness = cert.witness
    if witness is not None and witness.get("condition") == "cond_i":
        witness = {"condition": "cond_i", **cond_i.witness}
    return replace(cert, r_minus=r_minus, r_plus=r_plus, cond_i=cond_i, witness=witness, endpoint=1)
