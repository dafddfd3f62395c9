"""Smoothed-surrogate optimizer for halfspace moderators.

The hard trade-off problem (maximize mitigation subject to a cap on how many
ideal points get filtered) is relaxed to an unconstrained sum of per-user
losses. Writing v = w.x + b, a = w.e/(2c) and y = v + a, the per-user loss is
a quasi-convex curve in y, minimized when the user's content sits exactly on
the decision boundary (y = a, value -a^2):

    y < (1-eps)*a :  (1-eps^2)^2 a^3 / (2 eps y - 4 a (1-eps) + 3 a (1-eps)^2)
    (1-eps)*a <= y <= a :  y^2 - 2 a y
    y > a :  lam * (y - a)^2 - a^2

The left rational branch glues C1-continuously onto the parabola and decays
to zero as y -> -inf, so far-benign users exert no pull; the right branch
charges lam per squared unit of constraint violation. The sum is minimized
by projected gradient descent under the box |w_j| <= 1.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numpy.random import Generator, Philox

from .metrics import MetricReport, dm_closed_form_linear, generalization_gap, metrics
from .model import LinearModerator, Population

__all__ = [
    "SolverConfig",
    "CalibrationTarget",
    "CalibrationOutcome",
    "SolveResult",
    "TradeoffPoint",
    "NonPositiveAError",
    "DegenerateSolutionError",
    "surrogate_loss",
    "surrogate_gradient",
    "pgd_solve",
    "violation_vector",
    "violation_count",
    "penalty_value",
    "lambda_max",
    "calibrate_lambda",
    "sweep_lambda",
    "derive_seed",
    "generalization_gap",
]

_GOLDEN64 = 0x9E3779B97F4A7C15


def derive_seed(base: int, index: int) -> int:
    """Deterministic per-index seed stream; index 0 maps to the base seed."""
    return (int(base) + int(index) * _GOLDEN64) % 2**64


class NonPositiveAError(ValueError):
    """The loss shape parameter a = w.e/(2c) must be positive; caller floors it."""


class DegenerateSolutionError(RuntimeError):
    """Every restart collapsed to the zero normal; re-seed and retry."""


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters for the surrogate objective and its PGD solver.

    ``a_min`` floors the loss shape parameter when the candidate normal turns
    against the trend (w.e <= 0), keeping the branch formulas defined;
    geometry (the y values) is never floored.
    """

    epsilon: float = 0.9
    lam: float = 1.0
    learning_rate: float = 0.1
    max_iters: int = 2000
    restarts: int = 8
    seed: int = 0
    tol_grad: float = 1e-8
    a_min: float = 1e-6

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if self.lam < 0:
            raise ValueError(f"lam must be nonnegative, got {self.lam}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.max_iters < 1 or self.restarts < 1:
            raise ValueError("max_iters and restarts must be at least 1")
        if self.tol_grad <= 0 or self.a_min <= 0:
            raise ValueError("tol_grad and a_min must be positive")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")


@dataclass(frozen=True)
class CalibrationTarget:
    """Hard cap K on filtered ideal points, and the bisection precision."""

    K: int
    delta: float = 1e-3

    def __post_init__(self):
        if self.K < 0:
            raise ValueError("K must be nonnegative")
        if self.delta <= 0:
            raise ValueError("delta must be positive")


@dataclass(frozen=True)
class SolveResult:
    """A solved moderator with its diagnostics.

    ``objective`` is the value of the producing search: the summed surrogate
    loss for the PGD solver, the penalized/constrained search objective for
    the brute-force oracles.
    """

    moderator: LinearModerator
    objective: float
    dm: float
    metrics: MetricReport
    iterations_used: int
    converged: bool


@dataclass(frozen=True)
class TradeoffPoint:
    """One record of a lambda sweep; ``seed`` is the sweep's base seed."""

    lam: float
    seed: int
    dm: float
    fos_desired: float
    fos_retained: float
    filtered_count: int
    objective: float
    iterations: int
    converged: bool


def _branch_terms(y: np.ndarray, a: np.ndarray, eps: float, lam: float):
    """Loss values and partials (d/dy, d/da) per user; a must be positive.

    Branches are evaluated under masks: the left branch's denominator changes
    sign inside the middle region, so evaluating it everywhere would divide
    by zero.
    """
    values = np.empty_like(y)
    dl_dy = np.empty_like(y)
    dl_da = np.empty_like(y)

    breakpoint_left = (1.0 - eps) * a
    left = y < breakpoint_left
    right = y > a
    mid = ~(left | right)

    if np.any(left):
        yl, al = y[left], a[left]
        num = (1.0 - eps**2) ** 2 * al**3
        beta = 3.0 * (1.0 - eps) ** 2 - 4.0 * (1.0 - eps)
        den = 2.0 * eps * yl + beta * al
        values[left] = num / den
        dl_dy[left] = -2.0 * eps * num / den**2
        dl_da[left] = 3.0 * (1.0 - eps**2) ** 2 * al**2 / den - beta * num / den**2

    if np.any(mid):
        ym, am = y[mid], a[mid]
        values[mid] = ym**2 - 2.0 * am * ym
        dl_dy[mid] = 2.0 * ym - 2.0 * am
        dl_da[mid] = -2.0 * ym

    if np.any(right):
        yr, ar = y[right], a[right]
        values[right] = lam * (yr - ar) ** 2 - ar**2
        dl_dy[right] = 2.0 * lam * (yr - ar)
        dl_da[right] = -2.0 * lam * (yr - ar) - 2.0 * ar

    return values, dl_dy, dl_da


def surrogate_loss(y: float, a: float, cfg: SolverConfig) -> float:
    """Single-user surrogate loss; rejects a <= 0 (caller applies the floor)."""
    if a <= 0:
        raise NonPositiveAError(f"loss shape parameter a must be positive, got {a}")
    values, _, _ = _branch_terms(
        np.array([float(y)]), np.array([float(a)]), cfg.epsilon, cfg.lam
    )
    return float(values[0])


def _objective_and_gradient(
    w: np.ndarray,
    b: float,
    X: np.ndarray,
    costs: np.ndarray,
    e: np.ndarray,
    cfg: SolverConfig,
):
    """Summed surrogate loss and its exact (w, b) gradient at one point.

    Both y and a depend on w (da/dw = e/(2c)); only y depends on b. Where the
    floor is active, a is held constant so its chain-rule term drops out.
    """
    half_inv_cost = 1.0 / (2.0 * costs)
    a_raw = float(np.dot(w, e)) * half_inv_cost
    a = np.maximum(a_raw, cfg.a_min)
    floored = a_raw < cfg.a_min
    y = X @ w + b + a_raw

    values, dl_dy, dl_da = _branch_terms(y, a, cfg.epsilon, cfg.lam)
    dl_da = np.where(floored, 0.0, dl_da)

    grad_w = X.T @ dl_dy + e * float(np.sum((dl_dy + dl_da) * half_inv_cost))
    grad_b = float(np.sum(dl_dy))
    return float(np.sum(values)), grad_w, grad_b


def surrogate_gradient(
    w, b: float, pop: Population, cfg: SolverConfig
) -> tuple[np.ndarray, float]:
    """Exact gradient of the summed surrogate loss over the population."""
    w = np.asarray(w, dtype=np.float64)
    _, grad_w, grad_b = _objective_and_gradient(
        w, float(b), pop.feature_matrix, pop.costs, pop.trend.e, cfg
    )
    return grad_w, grad_b


def violation_vector(pop: Population, f: LinearModerator) -> np.ndarray:
    """Per-user hinge on the ideal point's score: max(0, w.(x + e/2c) + b)."""
    y = pop.feature_matrix @ f.w + f.b + float(np.dot(f.w, pop.trend.e)) / (
        2.0 * pop.costs
    )
    return np.maximum(y, 0.0)


def violation_count(g: np.ndarray) -> int:
    """Number of users whose ideal point is filtered (the l0 of the hinges)."""
    return int(np.count_nonzero(g > 0))


def penalty_value(g: np.ndarray) -> float:
    """Squared-l2 soft penalty of the hinge vector."""
    return float(np.dot(g, g))


def lambda_max(pop: Population) -> float:
    """Upper bound on achievable mitigation, plus one: a safe bisection cap.

    No user can save more than their baseline distortion |e|^2/(4c^2), so the
    termwise sum bounds any moderator's total mitigation.
    """
    e2 = float(np.dot(pop.trend.e, pop.trend.e))
    return float(np.sum(e2 / (4.0 * pop.costs**2))) + 1.0


def _initial_point(
    r: int, cfg: SolverConfig, X: np.ndarray, e: np.ndarray
) -> tuple[np.ndarray, float]:
    """Trend-facing start: w along e (plus per-restart noise), boundary at a
    data quantile so restarts probe different cuts through the mass."""
    rng = Generator(Philox(key=[cfg.seed % 2**64, r]))
    direction = e.copy()
    if r > 0:
        direction = direction + rng.normal(scale=0.3, size=e.shape[0])
    if not np.any(np.abs(direction) > 0):
        direction = e.copy()
    w = direction / np.max(np.abs(direction))
    q = (r + 1) / (cfg.restarts + 1)
    b = -float(np.quantile(X @ w, q))
    return w, b


def _run_restart(
    r: int,
    cfg: SolverConfig,
    X: np.ndarray,
    costs: np.ndarray,
    e: np.ndarray,
):
    """One PGD trajectory; returns the best iterate it visited.

    The step uses the mean-loss gradient (sum / n) so the published learning
    rate is independent of population size; with the raw sum the fixed rate
    overshoots by a factor of n. Tracking the best iterate guards against
    end-of-run oscillation in the stiff high-lambda regime.
    """
    n = X.shape[0]
    w, b = _initial_point(r, cfg, X, e)
    best_obj, best_w, best_b = np.inf, w, b
    iterations = 0
    converged = False

    for t in range(cfg.max_iters):
        obj, grad_w, grad_b = _objective_and_gradient(w, b, X, costs, e, cfg)
        if obj < best_obj:
            best_obj, best_w, best_b = obj, w, b
        w_next = np.clip(w - (cfg.learning_rate / n) * grad_w, -1.0, 1.0)
        b_next = b - (cfg.learning_rate / n) * grad_b
        # mean-loss projected gradient: (w - w_next)/lr equals grad_w/n off the box
        projected_grad = np.hstack(((w - w_next) / cfg.learning_rate, grad_b / n))
        w, b = w_next, b_next
        iterations = t + 1
        if float(np.linalg.norm(projected_grad)) <= cfg.tol_grad:
            converged = True
            break

    final_obj, _, _ = _objective_and_gradient(w, b, X, costs, e, cfg)
    if final_obj < best_obj:
        best_obj, best_w, best_b = final_obj, w, b
    return best_obj, best_w, best_b, iterations, converged


def pgd_solve(pop: Population, cfg: SolverConfig) -> SolveResult:
    """Minimize the summed surrogate loss under |w_j| <= 1; best of restarts."""
    X, costs, e = pop.feature_matrix, pop.costs, pop.trend.e
    best = None
    for r in range(cfg.restarts):
        obj, w, b, iterations, converged = _run_restart(r, cfg, X, costs, e)
        if not np.any(np.abs(w) > 0):
            continue
        if best is None or obj < best[0]:
            best = (obj, w, b, iterations, converged)
    if best is None:
        raise DegenerateSolutionError("all restarts collapsed to w = 0; re-seed")
    obj, w, b, iterations, converged = best
    moderator = LinearModerator(w, b)
    return SolveResult(
        moderator=moderator,
        objective=obj,
        dm=dm_closed_form_linear(pop, moderator),
        metrics=metrics(pop, moderator),
        iterations_used=iterations,
        converged=converged,
    )


@dataclass(frozen=True)
class CalibrationOutcome:
    """Result of the bisection on lambda.

    ``feasible`` is False when even the lambda cap cannot push the violation
    count under K; the cap's solution is still returned for inspection.
    """

    lam: float
    result: SolveResult
    feasible: bool
    solve_count: int


def calibrate_lambda(
    pop: Population, target: CalibrationTarget, cfg: SolverConfig
) -> CalibrationOutcome:
    """Bisection for the smallest penalty strength meeting the K-cap.

    Violations shrink as lambda grows, so the midpoint test is monotone:
    too many violations sends the search to the upper half. Each solve uses
    a seed derived from (base seed, step index) for a reproducible trace.
    The interval shrinks from lambda_max to delta in ceil(log2(max/delta))
    midpoint solves, plus the single feasibility probe at the cap.
    """
    if target.K > pop.n:
        raise ValueError(f"K = {target.K} exceeds population size {pop.n}")

    def solve_at(lam: float, step_index: int) -> SolveResult:
        sub = replace(cfg, lam=lam, seed=derive_seed(cfg.seed, step_index))
        return pgd_solve(pop, sub)

    if target.K >= pop.n:
        # The cap is vacuous: no penalty needed at all.
        result = solve_at(0.0, 0)
        return CalibrationOutcome(0.0, result, True, 1)

    cap = lambda_max(pop)
    result_cap = solve_at(cap, 0)
    solves = 1
    if violation_count(violation_vector(pop, result_cap.moderator)) > target.K:
        return CalibrationOutcome(cap, result_cap, False, solves)

    best_lam, best_result = cap, result_cap
    lo, hi = 0.0, cap
    step_index = 1
    while hi - lo > target.delta:
        mid = 0.5 * (lo + hi)
        result = solve_at(mid, step_index)
        solves += 1
        step_index += 1
        if violation_count(violation_vector(pop, result.moderator)) > target.K:
            lo = mid
        else:
            hi = mid
            if mid < best_lam:
                best_lam, best_result = mid, result
    return CalibrationOutcome(best_lam, best_result, True, solves)


def sweep_lambda(pop: Population, lambdas, cfg: SolverConfig) -> list[TradeoffPoint]:
    """Independent solve per lambda; seeds offset deterministically by index."""
    lambdas = [float(l) for l in lambdas]
    if not lambdas:
        raise ValueError("lambdas must be nonempty")
    if any(l < 0 for l in lambdas):
        raise ValueError("lambdas must be nonnegative")
    points = []
    for j, lam in enumerate(lambdas):
        sub = replace(cfg, lam=lam, seed=derive_seed(cfg.seed, j))
        result = pgd_solve(pop, sub)
        m = result.metrics
        points.append(
            TradeoffPoint(
                lam=lam,
                seed=cfg.seed,
                dm=result.dm,
                fos_desired=m.fos_desired,
                fos_retained=m.fos_retained,
                filtered_count=m.filtered_count,
                objective=result.objective,
                iterations=result.iterations_used,
                converged=result.converged,
            )
        )
    return points
