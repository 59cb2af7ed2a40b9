"""Numerical best responses, best-response iteration, and equilibrium checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .model import (
    DropPolicy,
    GameConfig,
    LinearPolicy,
    NoDrop,
    RateProfile,
    StepPolicy,
    UnstableQueueError,
    _potential_raw,
    feasible,
    keep_probability,
    utility,
)

__all__ = [
    "UpdateMode",
    "Trajectory",
    "best_response",
    "run_dynamics",
    "verify_equilibrium",
    "response_field",
    "triangular_grid",
]

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class UpdateMode(Enum):
    ROUND_ROBIN = "round_robin"
    SIMULTANEOUS = "simultaneous"


@dataclass(frozen=True)
class Trajectory:
    """Recorded best-response path: one profile per full update round."""

    iterates: tuple[RateProfile, ...]
    potential_series: tuple[float, ...]
    converged: bool

    @property
    def final_profile(self) -> RateProfile:
        return self.iterates[-1]


def _golden_max(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    """Golden-section maximization of a scalar function on [lo, hi]."""
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def _grid_golden_max(
    f_grid, f_scalar, lo: float, hi: float, points: int, tol: float
) -> tuple[float, float]:
    """Dense-grid bracketing followed by golden-section refinement."""
    xs = np.linspace(lo, hi, points)
    us = f_grid(xs)
    k = int(np.argmax(us))
    a = xs[max(k - 1, 0)]
    b = xs[min(k + 1, points - 1)]
    x, ux = _golden_max(f_scalar, float(a), float(b), tol)
    if us[k] > ux:
        return float(xs[k]), float(us[k])
    return x, ux


def _own_utility(rate, others_total: float, alpha: float, mu: float, policy: DropPolicy):
    """Utility of one user at ``rate`` against a fixed total of everyone else.

    Vectorized in ``rate``; negative where the load would be unstable, which
    keeps such points out of any argmax.
    """
    total = others_total + rate
    p = keep_probability(policy, total)
    return (rate * p) ** alpha * (mu - total * p)


def _keep_scalar(policy: DropPolicy, total: float) -> float:
    if isinstance(policy, NoDrop):
        return 1.0
    if isinstance(policy, StepPolicy):
        return 1.0 if total <= policy.threshold else 0.0
    return min(1.0, max(0.0, (policy.r2 - total) / (policy.r2 - policy.r1)))


def _own_utility_scalar(
    rate: float, others_total: float, alpha: float, mu: float, policy: DropPolicy
) -> float:
    """Pure-scalar twin of :func:`_own_utility` for tight search loops."""
    total = others_total + rate
    p = _keep_scalar(policy, total)
    return (rate * p) ** alpha * (mu - total * p)


def _own_utility_slope(
    rate: float, others_total: float, alpha: float, mu: float, policy: LinearPolicy
) -> float:
    """Derivative of the one-user utility inside the interpolating segment."""
    a_slope = policy.slope
    total = others_total + rate
    p = a_slope * total + policy.intercept
    eff = rate * p
    return alpha * eff ** (alpha - 1.0) * (p + rate * a_slope) * (
        mu - total * p
    ) - eff**alpha * (p + total * a_slope)


def _polish_interior(
    x: float,
    lo: float,
    hi: float,
    others_total: float,
    alpha: float,
    mu: float,
    policy: LinearPolicy,
) -> float:
    """Sharpen an interior argmax by bisecting the sign change of the slope.

    Golden-section localizes the maximum only to about sqrt(eps); the slope
    crossing pins it to machine precision.  Returns ``x`` unchanged when no
    bracketing sign change is found (endpoint maxima).
    """
    width = (hi - lo) * 1e-3
    a = max(lo + (hi - lo) * 1e-12, x - width)
    b = min(hi - (hi - lo) * 1e-12, x + width)
    if not a < b:
        return x
    ga = _own_utility_slope(a, others_total, alpha, mu, policy)
    gb = _own_utility_slope(b, others_total, alpha, mu, policy)
    if not (ga > 0.0 > gb):
        return x
    for _ in range(100):
        mid = 0.5 * (a + b)
        if _own_utility_slope(mid, others_total, alpha, mu, policy) > 0.0:
            a = mid
        else:
            b = mid
        if (b - a) <= 4e-16 * max(1.0, abs(a)):
            break
    return 0.5 * (a + b)


def best_response(
    i: int, others_total: float, policy: DropPolicy, config: GameConfig
) -> float:
    """Rate maximizing user ``i``'s utility against a fixed total of the others.

    Ties between a keep-everything candidate and an interpolated-region
    candidate go to the larger rate.  Returns 0 when no rate earns positive
    utility.
    """
    if others_total < 0:
        raise ValueError("others_total must be non-negative")
    alpha = config.alphas[i]
    mu = config.mu
    b_total = others_total
    star = alpha * (mu - b_total) / (alpha + 1.0) if b_total < mu else 0.0

    if isinstance(policy, NoDrop):
        return max(0.0, star)
    if isinstance(policy, StepPolicy):
        return max(0.0, min(star, policy.threshold - b_total))

    def u_grid(rate):
        return _own_utility(rate, b_total, alpha, mu, policy)

    def u(rate: float) -> float:
        return _own_utility_scalar(rate, b_total, alpha, mu, policy)

    best_rate, best_val = 0.0, 0.0
    if star > 0.0 and b_total + star <= policy.r1:
        val = u(star)
        if val > best_val:
            best_rate, best_val = star, val
    lo = max(0.0, policy.r1 - b_total)
    hi = policy.r2 - b_total
    if hi > lo:
        x, val = _grid_golden_max(u_grid, u, lo, hi, 1000, 1e-10)
        x = _polish_interior(x, lo, hi, b_total, alpha, mu, policy)
        val = u(x)
        if val >= best_val and val > 0.0:
            best_rate, best_val = x, val
    return best_rate if best_val > 0.0 else 0.0


def run_dynamics(
    config: GameConfig,
    policy: DropPolicy,
    init: RateProfile,
    mode: UpdateMode = UpdateMode.ROUND_ROBIN,
    tol: float = 1e-8,
    max_iter: int = 5000,
) -> Trajectory:
    """Iterate best responses from ``init`` until per-round changes fall below ``tol``.

    Round-robin updates users in index order within a round; simultaneous
    updates all of them against the previous round.  Non-convergence within
    ``max_iter`` rounds is reported in the trajectory, not raised.  Steeply
    sloped policies contract slowly (per-round factors above 0.99 occur), so
    the default budget is generous.
    """
    if not feasible(init, policy, config):
        raise UnstableQueueError("initial profile is not feasible")
    rates = list(init.rates)
    iterates = [RateProfile(tuple(rates))]
    potentials = [_potential_raw(iterates[0], policy, config)]
    converged = False
    for _ in range(max_iter):
        prev = list(rates)
        if mode is UpdateMode.ROUND_ROBIN:
            for i in range(config.m):
                others = sum(rates) - rates[i]
                rates[i] = best_response(i, others, policy, config)
        else:
            total_prev = sum(prev)
            rates = [
                best_response(i, total_prev - prev[i], policy, config)
                for i in range(config.m)
            ]
        profile = RateProfile(tuple(rates))
        iterates.append(profile)
        potentials.append(_potential_raw(profile, policy, config))
        if max(abs(r - q) for r, q in zip(rates, prev)) < tol:
            converged = True
            break
    return Trajectory(tuple(iterates), tuple(potentials), converged)


def _scan_cutoff(policy: DropPolicy, mu: float) -> float:
    """Total beyond which no unilateral rate can earn positive utility."""
    if isinstance(policy, NoDrop):
        return mu
    if isinstance(policy, StepPolicy):
        return policy.threshold
    return policy.r2


def verify_equilibrium(
    profile: RateProfile,
    policy: DropPolicy,
    config: GameConfig,
    tol: float = 1e-7,
    grid_points: int = 10_000,
) -> bool:
    """Deviation scan: no user can gain more than ``tol`` by moving alone.

    Each user's alternatives are swept on a dense grid (with golden-section
    refinement around the best grid point), independently of how best
    responses are computed elsewhere.
    """
    if not feasible(profile, policy, config):
        raise UnstableQueueError("profile is not feasible")
    for i in range(config.m):
        own = utility(i, profile, policy, config)
        others = profile.others_total(i)
        hi = _scan_cutoff(policy, config.mu) - others
        if hi <= 0.0:
            best_alt = 0.0
        else:
            alpha = config.alphas[i]

            def u_grid(rate):
                return _own_utility(rate, others, alpha, config.mu, policy)

            def u(rate: float) -> float:
                return _own_utility_scalar(rate, others, alpha, config.mu, policy)

            _, best_alt = _grid_golden_max(u_grid, u, 0.0, hi, grid_points + 1, 1e-10)
        if best_alt > own + tol:
            return False
    return True


def response_field(
    config: GameConfig, policy: DropPolicy, grid: list[RateProfile]
) -> list[tuple[RateProfile, tuple[float, float]]]:
    """Two-user update vectors: from each grid point toward both best responses."""
    if config.m != 2:
        raise ValueError("response_field is defined for two-user games")
    out = []
    for profile in grid:
        b0 = best_response(0, profile.rates[1], policy, config)
        b1 = best_response(1, profile.rates[0], policy, config)
        out.append((profile, (b0 - profile.rates[0], b1 - profile.rates[1])))
    return out


def triangular_grid(
    config: GameConfig, policy: DropPolicy, points_per_axis: int
) -> list[RateProfile]:
    """Two-user grid over the lower triangle where traffic can still get through."""
    if config.m != 2:
        raise ValueError("triangular_grid is defined for two-user games")
    if points_per_axis < 2:
        raise ValueError("points_per_axis must be at least 2")
    cutoff = _scan_cutoff(policy, config.mu)
    axis = np.linspace(0.0, cutoff, points_per_axis)
    grid = []
    for x in axis:
        for y in axis:
            if x + y <= cutoff:
                grid.append(RateProfile((float(x), float(y))))
    return grid
