"""Domain model: users, trends, moderators, and strategic best responses.

A user publishes content represented by a feature vector ``x`` and pays a
quadratic cost ``c`` per unit of squared displacement when rewriting it. A
moderator assigns every candidate vector a harmfulness score; content with a
nonpositive score is benign (published), positive means filtered. Facing a
moderator, a rational user shifts toward the trend direction as far as the
benign region allows, which this module resolves in closed form.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

# Scores within this slack of zero count as benign, so points constructed on
# the decision boundary (projections) are accepted despite roundoff.
BENIGN_TOL = 1e-12

# Active-set enumeration is exponential in the number of halfspaces.
MAX_POLYTOPE_FACES = 12


class EmptyBenignRegionError(ValueError):
    """No feasible point exists: the moderator's benign region is empty."""


class IllConditionedError(np.linalg.LinAlgError):
    """An active set's stacked normals are rank-deficient."""


def _as_vector(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite in every coordinate")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class UserProfile:
    """One content creator: original feature vector ``x`` and cost ``c > 0``."""

    x: np.ndarray
    c: float

    def __post_init__(self):
        object.__setattr__(self, "x", _as_vector(self.x, "x"))
        object.__setattr__(self, "c", float(self.c))
        if not (self.c > 0 and np.isfinite(self.c)):
            raise ValueError(f"manipulation cost c must be positive, got {self.c}")

    @property
    def d(self) -> int:
        return self.x.shape[0]

    def __eq__(self, other):
        if not isinstance(other, UserProfile):
            return NotImplemented
        return self.c == other.c and np.array_equal(self.x, other.x)


@dataclass(frozen=True, eq=False)
class Trend:
    """A global trend direction; alignment with it is the user's payoff."""

    e: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "e", _as_vector(self.e, "e"))
        if not np.linalg.norm(self.e) > 0:
            raise ValueError("trend vector must be nonzero")

    @property
    def d(self) -> int:
        return self.e.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Trend):
            return NotImplemented
        return np.array_equal(self.e, other.e)


@dataclass(frozen=True, eq=False)
class Population:
    """An ordered set of users sharing one trend direction."""

    users: tuple[UserProfile, ...]
    trend: Trend

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))
        if not self.users:
            raise ValueError("population must be nonempty")
        d = self.trend.d
        for i, u in enumerate(self.users):
            if u.d != d:
                raise ValueError(f"user {i} has dimension {u.d}, trend has {d}")

    @classmethod
    def from_arrays(cls, features, costs, trend) -> "Population":
        features = np.asarray(features, dtype=np.float64)
        costs = np.asarray(costs, dtype=np.float64)
        if features.ndim != 2 or features.shape[0] != costs.shape[0]:
            raise ValueError("features must be (n, d) with one cost per row")
        users = tuple(UserProfile(x, c) for x, c in zip(features, costs))
        return cls(users=users, trend=Trend(np.asarray(trend, dtype=np.float64)))

    @property
    def n(self) -> int:
        return len(self.users)

    @property
    def d(self) -> int:
        return self.trend.d

    # cached_property writes straight into __dict__, bypassing the frozen guard
    @property
    def feature_matrix(self) -> np.ndarray:
        cached = self.__dict__.get("_X")
        if cached is None:
            cached = np.vstack([u.x for u in self.users])
            cached.setflags(write=False)
            self.__dict__["_X"] = cached
        return cached

    @property
    def costs(self) -> np.ndarray:
        cached = self.__dict__.get("_costs")
        if cached is None:
            cached = np.array([u.c for u in self.users])
            cached.setflags(write=False)
            self.__dict__["_costs"] = cached
        return cached

    def __eq__(self, other):
        if not isinstance(other, Population):
            return NotImplemented
        return (
            self.trend == other.trend
            and len(self.users) == len(other.users)
            and all(a == b for a, b in zip(self.users, other.users))
        )


class Moderator:
    """Scoring interface: ``score(z) <= 0`` means ``z`` is benign."""

    def score(self, z) -> float:
        raise NotImplementedError

    def score_many(self, Z: np.ndarray) -> np.ndarray:
        return np.array([self.score(z) for z in Z])

    def is_benign(self, z) -> bool:
        return self.score(z) <= BENIGN_TOL


@dataclass(frozen=True, eq=False)
class LinearModerator(Moderator):
    """Halfspace moderator: benign region {z : w.z + b <= 0}."""

    w: np.ndarray
    b: float

    def __post_init__(self):
        object.__setattr__(self, "w", _as_vector(self.w, "w"))
        object.__setattr__(self, "b", float(self.b))
        if not np.any(np.abs(self.w) > 0):
            raise ValueError("moderator normal w must be nonzero")

    def score(self, z) -> float:
        return float(np.dot(self.w, z) + self.b)

    def score_many(self, Z: np.ndarray) -> np.ndarray:
        return Z @ self.w + self.b

    def __eq__(self, other):
        if not isinstance(other, LinearModerator):
            return NotImplemented
        return self.b == other.b and np.array_equal(self.w, other.w)


@dataclass(frozen=True, eq=False)
class PolytopeModerator(Moderator):
    """Intersection of halfspaces; benign iff every w_j.z + b_j <= 0."""

    halfspaces: tuple[tuple[np.ndarray, float], ...]

    def __post_init__(self):
        faces = []
        for j, (w, b) in enumerate(self.halfspaces):
            w = _as_vector(w, f"w[{j}]")
            if not np.any(np.abs(w) > 0):
                raise ValueError(f"halfspace {j} has zero normal")
            faces.append((w, float(b)))
        if not faces:
            raise ValueError("polytope moderator needs at least one halfspace")
        if len(faces) > MAX_POLYTOPE_FACES:
            raise ValueError(
                f"at most {MAX_POLYTOPE_FACES} halfspaces supported, got {len(faces)}"
            )
        object.__setattr__(self, "halfspaces", tuple(faces))

    @property
    def m(self) -> int:
        return len(self.halfspaces)

    @property
    def normals(self) -> np.ndarray:
        return np.vstack([w for w, _ in self.halfspaces])

    @property
    def offsets(self) -> np.ndarray:
        return np.array([b for _, b in self.halfspaces])

    def score(self, z) -> float:
        return float(np.max(self.normals @ np.asarray(z, dtype=np.float64) + self.offsets))

    def score_many(self, Z: np.ndarray) -> np.ndarray:
        return np.max(Z @ self.normals.T + self.offsets, axis=1)


class TrivialModerator(Moderator):
    """The do-nothing moderator: everything is benign."""

    def score(self, z) -> float:
        return -np.inf

    def score_many(self, Z: np.ndarray) -> np.ndarray:
        return np.full(Z.shape[0], -np.inf)


#: Shared do-nothing moderator instance (the distortion baseline).
TRIVIAL = TrivialModerator()


class ResponseCase(Enum):
    UNCONSTRAINED = "unconstrained"
    PROJECTED = "projected"
    STAY_FILTERED = "stay_filtered"
    CROSS_TO_BOUNDARY = "cross_to_boundary"


@dataclass(frozen=True)
class BestResponseResult:
    """Outcome of one user's optimization against a moderator.

    ``filtered`` is True only when the user stays put on the filtered side;
    every other case publishes successfully. ``utility`` is the achieved
    payoff: trend alignment (if published) minus quadratic movement cost.
    """

    z_star: np.ndarray = field(repr=False)
    case_tag: ResponseCase
    filtered: bool
    utility: float


def ideal_point(u: UserProfile, e: Trend) -> np.ndarray:
    """The unmoderated optimum x + e/(2c): trend pull balanced against cost."""
    return u.x + e.e / (2.0 * u.c)


def utility(z, u: UserProfile, e: Trend, f: Moderator) -> float:
    """Payoff of publishing ``z``: benign-gated trend alignment minus cost."""
    z = np.asarray(z, dtype=np.float64)
    gain = float(np.dot(z, e.e)) if f.is_benign(z) else 0.0
    return gain - u.c * float(np.dot(z - u.x, z - u.x))


def project_hyperplane(z, f: LinearModerator) -> np.ndarray:
    """L2 projection of ``z`` onto the decision boundary {w.z + b = 0}."""
    z = np.asarray(z, dtype=np.float64)
    w = f.w
    return z - ((np.dot(w, z) + f.b) / np.dot(w, w)) * w


def _project_active_set(z: np.ndarray, A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Project ``z`` onto the affine set {p : A p + b = 0}; A must be full rank."""
    if np.linalg.matrix_rank(A) < A.shape[0]:
        raise IllConditionedError("active-set normal matrix is rank-deficient")
    residual = A @ z + b
    multipliers = np.linalg.solve(A @ A.T, residual)
    return z - A.T @ multipliers


def project_polytope(z, f: PolytopeModerator) -> np.ndarray:
    """Nearest point of the benign region, by active-set enumeration.

    Tries every subset of faces as the active set, projects onto its affine
    intersection, and keeps the closest candidate feasible for all faces.
    Exact for convex polyhedra; cost is 2^m projections.
    """
    z = np.asarray(z, dtype=np.float64)
    A, b = f.normals, f.offsets
    tol = 1e-9 * (1.0 + float(np.linalg.norm(z)))
    if np.max(A @ z + b) <= tol:
        return z
    best = None
    best_dist = np.inf
    m = f.m
    for r in range(1, min(m, z.shape[0]) + 1):
        for subset in itertools.combinations(range(m), r):
            idx = list(subset)
            try:
                p = _project_active_set(z, A[idx], b[idx])
            except IllConditionedError:
                continue
            if np.max(A @ p + b) > tol:
                continue
            dist = float(np.dot(p - z, p - z))
            if dist < best_dist:
                best, best_dist = p, dist
    if best is None:
        raise EmptyBenignRegionError(
            "no feasible projection candidate: benign region appears empty"
        )
    return best


def _project_benign(z: np.ndarray, f: Moderator) -> np.ndarray:
    if isinstance(f, LinearModerator):
        return project_hyperplane(z, f)
    if isinstance(f, PolytopeModerator):
        return project_polytope(z, f)
    raise TypeError(f"cannot project onto benign region of {type(f).__name__}")


def best_response(u: UserProfile, e: Trend, f: Moderator) -> BestResponseResult:
    """Utility-maximizing rewrite of ``u.x`` against moderator ``f``.

    Three regimes: the ideal point is benign and taken as-is; the ideal point
    is filtered but the origin is benign, so the user settles for the boundary
    projection of the ideal point; or both are filtered, and the user crosses
    to the boundary only when doing so beats the zero utility of staying put
    (ties break to staying).
    """
    z_prime = ideal_point(u, e)
    if f.is_benign(z_prime):
        gain = float(np.dot(z_prime, e.e))
        cost = u.c * float(np.dot(z_prime - u.x, z_prime - u.x))
        return BestResponseResult(z_prime, ResponseCase.UNCONSTRAINED, False, gain - cost)

    p = _project_benign(z_prime, f)
    # p sits on the boundary by construction, hence publishes; evaluating the
    # benign indicator at p would be roundoff-fragile.
    utility_p = float(np.dot(p, e.e)) - u.c * float(np.dot(p - u.x, p - u.x))

    if f.is_benign(u.x):
        return BestResponseResult(p, ResponseCase.PROJECTED, False, utility_p)
    if utility_p > 0.0:
        return BestResponseResult(p, ResponseCase.CROSS_TO_BOUNDARY, False, utility_p)
    return BestResponseResult(u.x, ResponseCase.STAY_FILTERED, True, 0.0)
