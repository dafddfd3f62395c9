"""Shared test oracles: exhaustive utility grids and regime sampling."""

import numpy as np

from modbalance import LinearModerator, best_response, ideal_point


def in_strategic_regime(u, e, f):
    """True when engaging with the trend beats self-censorship for this user.

    The utility model zeroes the alignment gain of filtered content, so a
    user whose achievable alignment is negative can profit from opting out:
    staying filtered (worth 0) or posting just across the boundary (gain
    gone, cost tiny). Such trend-averse corners are outside the strategic
    model; optimality checks sample the regime where the case-split response
    is worth at least the opt-out supremum.
    """
    r = best_response(u, e, f)
    if f.score(u.x) > 0:
        opt_out = 0.0
    else:
        dist = abs(f.score(u.x)) / np.linalg.norm(f.w)
        opt_out = -u.c * dist * dist
    return r.utility >= opt_out


def grid_max_utility(u, e, f, half_extent=None, points=201):
    """Independent oracle: exhaustive utility over a plane through x and z'.

    The best response always lies in the affine plane spanned by the trend
    and the moderator normal through x, so a dense 2-d grid there bounds the
    achievable utility.
    """
    z_prime = ideal_point(u, e)
    u1 = e.e / np.linalg.norm(e.e)
    if isinstance(f, LinearModerator):
        w_perp = f.w - np.dot(f.w, u1) * u1
    else:
        w_perp = np.zeros_like(u1)
    if np.linalg.norm(w_perp) > 1e-12:
        u2 = w_perp / np.linalg.norm(w_perp)
    elif u.d > 1:
        u2 = np.zeros_like(u1)
        u2[int(np.argmin(np.abs(u1)))] = 1.0
        u2 = u2 - np.dot(u2, u1) * u1
        u2 = u2 / np.linalg.norm(u2)
    else:
        u2 = np.zeros_like(u1)
    center = 0.5 * (u.x + z_prime)
    if half_extent is None:
        half_extent = 2.0 * (1.0 + np.linalg.norm(z_prime - u.x))
        if isinstance(f, LinearModerator):
            half_extent += abs(f.score(z_prime)) / np.linalg.norm(f.w)
    t = np.linspace(-half_extent, half_extent, points)
    T1, T2 = np.meshgrid(t, t)
    Z = (
        center[None, :]
        + T1.reshape(-1, 1) * u1[None, :]
        + T2.reshape(-1, 1) * u2[None, :]
    )
    gain = np.where(f.score_many(Z) <= 1e-12, Z @ e.e, 0.0)
    cost = u.c * np.sum((Z - u.x) ** 2, axis=1)
    return float(np.max(gain - cost))


def random_regime_instance(rng, d):
    """One random (user, trend, moderator) triple inside the strategic regime."""
    from modbalance import Trend, UserProfile

    while True:
        u = UserProfile(rng.normal(scale=1.5, size=d), float(rng.uniform(0.2, 2.0)))
        e_vec = rng.normal(size=d)
        if np.linalg.norm(e_vec) < 1e-6:
            e_vec[0] = 1.0
        e = Trend(e_vec)
        w = rng.normal(size=d)
        if np.linalg.norm(w) < 1e-6:
            w[0] = 1.0
        f = LinearModerator(w, float(rng.normal()))
        if in_strategic_regime(u, e, f):
            return u, e, f
