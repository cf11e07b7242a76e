"""Damped Newton iteration run on many starting points at once."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class NewtonBatch:
    x: np.ndarray          # (m, k) final iterates
    fx: np.ndarray         # (m, k) residual at x
    norm: np.ndarray       # (m,)
    converged: np.ndarray  # (m,) bool, |F| <= tol
    iterations: np.ndarray


def fd_jacobian(F, x: np.ndarray, fx: np.ndarray | None = None, *, step: float = 1e-7,
                scheme: str = "forward") -> np.ndarray:
    """Finite-difference Jacobians of a batched map, shape ``(m, k, k)``.

    Perturbations are ``step * max(1, |x_j|)`` (forward) or
    ``step * max(1, |x|)`` (central); all perturbed points go through ``F``
    in a single call.
    """
    m, k = x.shape
    if scheme == "forward":
        hs = step * np.maximum(1.0, np.abs(x))  # (m, k)
        pert = np.repeat(x[:, None, :], k, axis=1)  # (m, k, k): row i perturbs coordinate i
        idx = np.arange(k)
        pert[:, idx, idx] += hs
        fp = F(pert.reshape(m * k, k)).reshape(m, k, k)
        if fx is None:
            fx = F(x)
        # J[:, a, b] = dF_a / dx_b
        return np.transpose((fp - fx[:, None, :]) / hs[:, :, None], (0, 2, 1))
    if scheme == "central":
        hs = step * np.maximum(1.0, np.linalg.norm(x, axis=1))  # (m,)
        eye = np.eye(k)
        plus = x[:, None, :] + hs[:, None, None] * eye
        minus = x[:, None, :] - hs[:, None, None] * eye
        both = F(np.concatenate([plus, minus], axis=0).reshape(2 * m * k, k)).reshape(2, m, k, k)
        return np.transpose((both[0] - both[1]) / (2.0 * hs[:, None, None]), (0, 2, 1))
    raise ValueError(f"unknown difference scheme {scheme!r}")


def damped_newton(F, x0, *, tol: float = 1e-10, max_iter: int = 50, max_halvings: int = 30,
                  step: float = 1e-7, scheme: str = "forward") -> NewtonBatch:
    """Newton on ``F: (m, k) -> (m, k)`` from every row of ``x0``.

    Each step is damped by halving until the residual norm decreases, at most
    ``max_halvings`` times; rows that cannot decrease, or whose residual turns
    non-finite, are frozen. Rows are independent, so results do not depend on
    how a seed set is batched.
    """
    x = np.array(x0, dtype=float, copy=True)
    if x.ndim != 2:
        raise ValueError("x0 must have shape (m, k)")
    fx = F(x)
    nrm = np.linalg.norm(fx, axis=1)
    converged = nrm <= tol
    frozen = ~np.isfinite(nrm)
    iters = np.zeros(len(x), dtype=int)
    for _ in range(max_iter):
        act = np.flatnonzero(~(converged | frozen))
        if act.size == 0:
            break
        J = fd_jacobian(F, x[act], fx[act], step=step, scheme=scheme)
        good = np.isfinite(J).all(axis=(1, 2))
        frozen[act[~good]] = True
        act = act[good]
        if act.size == 0:
            break
        J = J[good]
        d = -np.einsum("mab,mb->ma", np.linalg.pinv(J, rcond=1e-13), fx[act])
        alpha = np.ones(act.size)
        pending = np.arange(act.size)
        for _h in range(max_halvings + 1):
            rows = act[pending]
            trial = x[rows] + alpha[pending, None] * d[pending]
            ft = F(trial)
            nt = np.linalg.norm(ft, axis=1)
            ok = np.isfinite(nt) & (nt < nrm[rows])
            acc = rows[ok]
            x[acc], fx[acc], nrm[acc] = trial[ok], ft[ok], nt[ok]
            iters[acc] += 1
            pending = pending[~ok]
            if pending.size == 0:
                break
            alpha[pending] *= 0.5
        frozen[act[pending]] = True
        converged |= nrm <= tol
    return NewtonBatch(x, fx, nrm, converged, iters)


def dedupe(points: np.ndarray, dist: float) -> list[int]:
    """Indices of points kept in order, dropping any within ``dist`` of an earlier kept one."""
    kept: list[int] = []
    for i, p in enumerate(points):
        if all(np.linalg.norm(p - points[j]) > dist for j in kept):
            kept.append(i)
    return kept
