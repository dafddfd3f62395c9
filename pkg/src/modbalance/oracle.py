"""Brute-force reference solvers for two-dimensional desk-scale instances.

Exact optimization over halfspaces is combinatorially hard, but in the plane
a finite candidate set suffices for verification work: a direction/offset
grid, boundaries snapped through every data point and ideal point, and (for
exactness on point-incident optima) boundaries through every pair drawn from
the data and ideal points. Candidates are scored in closed form, so the whole
sweep is a few matrix products.

The candidate grids are nested under doubling of their step counts, so
refining the search can only improve the reported optimum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from .metrics import metrics
from .model import BENIGN_TOL, LinearModerator, Population
from .solver import SolveResult

__all__ = [
    "OracleConfig",
    "NoFeasibleCandidateError",
    "oracle_2d",
    "oracle_penalized_2d",
    "toy_disk",
]


class NoFeasibleCandidateError(RuntimeError):
    """Every candidate broke the violation cap; carries the least-bad one."""

    def __init__(self, message: str, w: np.ndarray, b: float, violations: int):
        super().__init__(message)
        self.w = w
        self.b = b
        self.violations = violations


@dataclass(frozen=True)
class OracleConfig:
    """Search resolution, the violation cap K, and the boundary slack.

    ``eps_slack`` relaxes the strict side of the mitigation index set, so a
    boundary grazing an ideal point is scored stably. ``use_candidates``
    adds pairwise point-incident boundaries on top of the grid.
    """

    angle_steps: int = 64
    offset_steps: int = 64
    K: int = 0
    eps_slack: float = 1e-9
    use_candidates: bool = True

    def __post_init__(self):
        if self.angle_steps < 8 or self.offset_steps < 8:
            raise ValueError("angle_steps and offset_steps must be at least 8")
        if self.K < 0:
            raise ValueError("K must be nonnegative")
        if self.eps_slack <= 0:
            raise ValueError("eps_slack must be positive")


def _candidates(pop: Population, cfg: OracleConfig) -> tuple[np.ndarray, np.ndarray]:
    """Stack of candidate (w, b) rows, unit-normalized normals."""
    X = pop.feature_matrix
    ideal = X + pop.trend.e / (2.0 * pop.costs)[:, None]
    ws, bs = [], []

    thetas = 2.0 * np.pi * np.arange(cfg.angle_steps) / cfg.angle_steps
    for theta in thetas:
        w = np.array([np.cos(theta), np.sin(theta)])
        proj = X @ w
        lo, hi = float(np.min(proj)), float(np.max(proj))
        fractions = np.arange(cfg.offset_steps + 1) / cfg.offset_steps
        offsets = lo + (hi - lo) * fractions
        # boundaries snapped exactly through each point and each ideal point
        incident = np.concatenate([proj, ideal @ w])
        for t in np.concatenate([offsets, incident]):
            ws.append(w)
            bs.append(-float(t))

    if cfg.use_candidates:
        points = np.vstack([X, ideal])
        k = points.shape[0]
        for i in range(k):
            for j in range(i + 1, k):
                direction = points[j] - points[i]
                norm = float(np.linalg.norm(direction))
                if norm < 1e-12:
                    continue
                w = np.array([direction[1], -direction[0]]) / norm
                b = -float(np.dot(w, points[i]))
                ws.append(w)
                bs.append(b)
                ws.append(-w)
                bs.append(-b)

    return np.vstack(ws), np.array(bs)


def _evaluate(
    pop: Population, W: np.ndarray, B: np.ndarray, eps_slack: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mitigation, squared-hinge penalty, and violation count per candidate."""
    X, costs, e = pop.feature_matrix, pop.costs, pop.trend.e
    n_candidates = W.shape[0]
    dm = np.empty(n_candidates)
    penalty = np.empty(n_candidates)
    violations = np.empty(n_candidates, dtype=np.int64)
    half_inv_cost = 1.0 / (2.0 * costs)

    chunk = 4096
    for start in range(0, n_candidates, chunk):
        Wc = W[start : start + chunk]
        Bc = B[start : start + chunk]
        V = X @ Wc.T + Bc[None, :]
        S = np.outer(half_inv_cost, Wc @ e)
        Y = V + S
        active = (V <= BENIGN_TOL) & (Y > eps_slack)
        wnorm2 = np.sum(Wc**2, axis=1)
        dm[start : start + chunk] = (
            np.sum(np.where(active, S**2 - V**2, 0.0), axis=0) / wnorm2
        )
        hinge = np.maximum(Y, 0.0)
        penalty[start : start + chunk] = np.sum(hinge**2, axis=0)
        # boundary-incident candidates graze ideal points to within roundoff;
        # the slack keeps their count stable under re-evaluation
        violations[start : start + chunk] = np.sum(Y > eps_slack, axis=0)
    return dm, penalty, violations


def _require_plane(pop: Population):
    if pop.d != 2:
        raise ValueError(f"oracle search requires d = 2, got d = {pop.d}")


def _build_result(pop: Population, w, b, objective, dm, candidates) -> SolveResult:
    moderator = LinearModerator(w, b)
    return SolveResult(
        moderator=moderator,
        objective=float(objective),
        dm=float(dm),
        metrics=metrics(pop, moderator),
        iterations_used=int(candidates),
        converged=True,
    )


def oracle_2d(pop: Population, cfg: OracleConfig) -> SolveResult:
    """Best mitigation over all candidates meeting the violation cap K."""
    _require_plane(pop)
    W, B = _candidates(pop, cfg)
    dm, _, violations = _evaluate(pop, W, B, cfg.eps_slack)
    feasible = violations <= cfg.K
    if not np.any(feasible):
        least = int(np.argmin(violations))
        raise NoFeasibleCandidateError(
            f"no candidate satisfies the cap K = {cfg.K}; "
            f"best candidate violates {int(violations[least])}",
            w=W[least],
            b=float(B[least]),
            violations=int(violations[least]),
        )
    masked = np.where(feasible, dm, -np.inf)
    best = int(np.argmax(masked))
    return _build_result(pop, W[best], B[best], -dm[best], dm[best], W.shape[0])


def oracle_penalized_2d(pop: Population, lam: float, cfg: OracleConfig) -> SolveResult:
    """Exact candidate-set minimizer of -mitigation + lam * squared hinges."""
    _require_plane(pop)
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    W, B = _candidates(pop, cfg)
    dm, penalty, _ = _evaluate(pop, W, B, cfg.eps_slack)
    objective = -dm + lam * penalty
    best = int(np.argmin(objective))
    return _build_result(pop, W[best], B[best], objective[best], dm[best], W.shape[0])


def toy_disk(
    theta_grid, c: float = 0.5, samples: int = 100_000, seed: int = 0
) -> list[tuple[float, float, float]]:
    """Trade-off curve for content uniform on the unit disk, trend (1, 0).

    Sweeps vertical boundaries x1 = theta and reports, per theta, the mean
    per-user mitigation and the fraction of ideal points left unfiltered.
    One shared Monte Carlo sample serves the whole grid, so the speech index
    is exactly non-decreasing in theta rather than merely in expectation.
    """
    theta_grid = [float(t) for t in theta_grid]
    if any(t < -1.0 or t > 1.0 for t in theta_grid):
        raise ValueError("theta values must lie in [-1, 1]")
    if c <= 0:
        raise ValueError("cost c must be positive")
    if samples < 1:
        raise ValueError("samples must be positive")

    rng = Generator(Philox(key=[int(seed) % 2**64, 0]))
    radius = np.sqrt(rng.uniform(size=samples))
    angle = rng.uniform(0.0, 2.0 * np.pi, size=samples)
    x1 = radius * np.cos(angle)

    shift = 1.0 / (2.0 * c)  # trend advance along (1, 0)
    out = []
    for theta in theta_grid:
        v = x1 - theta
        active = (v <= BENIGN_TOL) & (v + shift > BENIGN_TOL)
        dm = float(np.mean(np.where(active, shift**2 - v**2, 0.0)))
        fos = float(np.mean(x1 + shift <= theta + BENIGN_TOL))
        out.append((theta, dm, fos))
    return out
