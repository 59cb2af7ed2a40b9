"""Slotted stochastic simulation of the shared queue with estimated-rate dropping.

Time advances in unit slots.  Each slot the server estimates the offered
total from a sliding window of past arrival counts, applies the drop policy
to that estimate, and thins every user's arrivals independently.  Delay is
either read off the steady-state formula slot by slot (fast, good for
sweeps) or measured per packet from an explicit FCFS event queue.
"""

from __future__ import annotations

import math
import statistics
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from itertools import islice, product
from typing import Sequence

import numpy as np

from .analysis import (
    WelfareKind,
    optimal_total_rate,
    social_optimum_sum,
)
from .mechanism import DesignInfeasibleError, DesignSpec, design_linear
from .model import DropPolicy, GameConfig, RateProfile, keep_probability

__all__ = [
    "QueueMode",
    "OverloadError",
    "SimConfig",
    "SimReport",
    "SweepCell",
    "estimate_rate",
    "run",
    "empirical_poa",
    "sweep",
]


class QueueMode(Enum):
    ANALYTIC_DELAY = "analytic"
    EVENT_QUEUE = "event"


class OverloadError(RuntimeError):
    """The accepted load exceeded what the server can drain."""


@dataclass(frozen=True)
class SimConfig:
    """One simulation run: game, policy, offered rates (packets per slot)."""

    game: GameConfig
    policy: DropPolicy
    input_rates: RateProfile
    slots: int = 100_000
    window: int = 1
    seed: int = 0
    queue_mode: QueueMode = QueueMode.EVENT_QUEUE
    queue_cap: int = 100_000

    def __post_init__(self) -> None:
        if len(self.input_rates.rates) != self.game.m:
            raise ValueError(
                f"input_rates has {len(self.input_rates.rates)} users, "
                f"the game has {self.game.m}"
            )
        if self.window < 1:
            raise ValueError(f"window must be at least 1, got {self.window}")
        if self.slots < self.window:
            raise ValueError(
                f"slots ({self.slots}) must be at least the window ({self.window})"
            )
        if self.queue_cap < 1:
            raise ValueError(f"queue_cap must be positive, got {self.queue_cap}")


@dataclass(frozen=True)
class SimReport:
    """Aggregates past warm-up, plus a per-slot trace of the dropping loop."""

    input_rates: tuple[float, ...]
    arrivals: tuple[int, ...]
    accepted: tuple[int, ...]
    goodput: tuple[float, ...]
    mean_delay: tuple[float, ...]
    power: tuple[float, ...]
    sum_welfare: float
    log_welfare: float
    empirical_poa: float
    estimated_rates: tuple[float, ...]
    drop_probs: tuple[float, ...]
    slot_arrivals: tuple[int, ...]
    slots: int
    warmup_slots: int


def estimate_rate(history: Sequence[float], window: int) -> float:
    """Mean of the last ``min(window, len(history))`` per-slot totals."""
    if window < 1:
        raise ValueError(f"window must be at least 1, got {window}")
    n = len(history)
    if n == 0:
        raise ValueError("cannot estimate a rate from an empty history")
    w = min(window, n)
    return float(sum(islice(history, n - w, None)) / w)


def _fifo_departures(
    arrivals: np.ndarray, services: np.ndarray, server_free: float
) -> np.ndarray:
    """Departure instants of a FCFS batch given when the server last freed up."""
    cum = np.cumsum(services)
    started_before = arrivals - (cum - services)
    return cum + np.maximum.accumulate(np.maximum(started_before, server_free))


def run(sim: SimConfig) -> SimReport:
    """Simulate and aggregate.  Deterministic for a given config and seed."""
    rng = np.random.Generator(np.random.PCG64(sim.seed))
    m = sim.game.m
    mu = sim.game.mu
    rates = np.asarray(sim.input_rates.rates, dtype=float)
    warmup = sim.window

    history: deque[int] = deque(maxlen=sim.window)
    history_sum = 0

    est_trace = np.empty(sim.slots)
    drop_trace = np.empty(sim.slots)
    arr_trace = np.empty(sim.slots, dtype=np.int64)

    arrivals_total = np.zeros(m, dtype=np.int64)
    accepted_total = np.zeros(m, dtype=np.int64)
    delay_weight = np.zeros(m)  # sum of per-packet delays, by user

    event_mode = sim.queue_mode is QueueMode.EVENT_QUEUE
    server_free = 0.0
    pending: deque[float] = deque()  # departure instants not yet drained

    for t in range(sim.slots):
        est = history_sum / len(history) if history else 0.0
        p_keep = keep_probability(sim.policy, est)
        arr = rng.poisson(rates)
        acc = rng.binomial(arr, p_keep)
        arr_sum = int(arr.sum())
        acc_sum = int(acc.sum())

        est_trace[t] = est
        drop_trace[t] = 1.0 - p_keep
        arr_trace[t] = arr_sum
        counted = t >= warmup
        if counted:
            arrivals_total += arr
            accepted_total += acc

        if event_mode:
            if acc_sum:
                users = np.repeat(np.arange(m), acc)
                times = t + rng.random(acc_sum)
                order = np.argsort(times, kind="stable")
                times = times[order]
                users = users[order]
                services = rng.exponential(1.0 / mu, acc_sum)
                departures = _fifo_departures(times, services, server_free)
                server_free = float(departures[-1])
                if counted:
                    np.add.at(delay_weight, users, departures - times)
                slot_end = t + 1.0
                idx = int(np.searchsorted(departures, slot_end, side="right"))
                pending.extend(departures[idx:])
            while pending and pending[0] <= t + 1.0:
                pending.popleft()
            if len(pending) > sim.queue_cap:
                raise OverloadError(
                    f"queue backlog {len(pending)} exceeded the cap {sim.queue_cap} "
                    f"at slot {t}"
                )
        elif acc_sum:
            if acc_sum >= mu:
                raise OverloadError(
                    f"accepted load {acc_sum} reached the per-slot service rate {mu} "
                    f"at slot {t}; the steady-state delay is undefined"
                )
            if counted:
                delay_weight += acc * (1.0 / (mu - acc_sum))

        if len(history) == sim.window:
            history_sum -= history[0]
        history.append(arr_sum)
        history_sum += arr_sum

    kept_slots = sim.slots - warmup
    if kept_slots > 0:
        goodput = accepted_total / kept_slots
    else:
        goodput = np.zeros(m)
    mean_delay = np.where(accepted_total > 0, delay_weight / np.maximum(accepted_total, 1), 0.0)
    power = np.where(
        (goodput > 0) & (mean_delay > 0),
        goodput ** np.asarray(sim.game.alphas) / np.where(mean_delay > 0, mean_delay, 1.0),
        0.0,
    )
    sum_welfare = float(power.sum())
    log_welfare = float(np.sum(np.log(power))) if np.all(power > 0) else -math.inf

    report = SimReport(
        input_rates=tuple(float(r) for r in rates),
        arrivals=tuple(int(v) for v in arrivals_total),
        accepted=tuple(int(v) for v in accepted_total),
        goodput=tuple(float(v) for v in goodput),
        mean_delay=tuple(float(v) for v in mean_delay),
        power=tuple(float(v) for v in power),
        sum_welfare=sum_welfare,
        log_welfare=log_welfare,
        empirical_poa=math.nan,
        estimated_rates=tuple(float(v) for v in est_trace),
        drop_probs=tuple(float(v) for v in drop_trace),
        slot_arrivals=tuple(int(v) for v in arr_trace),
        slots=sim.slots,
        warmup_slots=warmup,
    )
    if sim.game.homogeneous:
        report = replace(
            report,
            empirical_poa=empirical_poa(report, sim.game, WelfareKind.SUM_LOG_UTILITY),
        )
    return report


def empirical_poa(report: SimReport, config: GameConfig, kind: WelfareKind) -> float:
    """Measured price of anarchy: drop-free optimal welfare over measured welfare.

    A user with zero measured power makes the log-kind ratio +inf.
    """
    alpha = config.alpha
    if kind is WelfareKind.SUM_LOG_UTILITY:
        lam_opt = optimal_total_rate(config)
        per_user_opt = (lam_opt / config.m) ** alpha * (config.mu - lam_opt)
        ratio = 1.0
        for p in report.power:
            if p == 0.0:
                return math.inf
            ratio *= per_user_opt / p
        return ratio
    _, opt_value = social_optimum_sum(config)
    total = sum(report.power)
    if total == 0.0:
        return math.inf
    return opt_value / total


@dataclass(frozen=True)
class SweepCell:
    """Aggregated replications for one (target, service rate, window) point."""

    desired_poa: float
    mu: float
    window: int
    replications: int
    mean_poa: float
    std_poa: float
    error: str | None = None


def _run_cell(
    base: SimConfig,
    desired_poa: float,
    mu: float,
    window: int,
    replications: int,
    welfare_kind: WelfareKind,
    keep_prob: float,
) -> SweepCell:
    try:
        game = GameConfig.uniform(mu, base.game.alpha, base.game.m)
        design = design_linear(
            DesignSpec(
                config=game,
                epsilon=desired_poa - 1.0,
                keep_prob=keep_prob,
                welfare_kind=welfare_kind,
            )
        )
        poas = []
        for k in range(replications):
            sim = replace(
                base,
                game=game,
                policy=design.policy,
                input_rates=design.predicted_ne,
                window=window,
                seed=base.seed + k,
            )
            poas.append(empirical_poa(run(sim), game, welfare_kind))
        mean = statistics.fmean(poas)
        std = statistics.stdev(poas) if len(poas) > 1 else 0.0
        return SweepCell(desired_poa, mu, window, replications, mean, std)
    except (DesignInfeasibleError, OverloadError, ValueError) as exc:
        return SweepCell(
            desired_poa, mu, window, replications, math.nan, math.nan, str(exc)
        )


def sweep(
    base: SimConfig,
    desired_poas: Sequence[float],
    mus: Sequence[float],
    windows: Sequence[int],
    replications: int,
    welfare_kind: WelfareKind = WelfareKind.SUM_LOG_UTILITY,
    keep_prob: float = 0.9,
    max_workers: int | None = None,
) -> list[SweepCell]:
    """Design-and-simulate over the cross product of targets, rates, and windows.

    Every cell designs a linear policy for its target, offers the predicted
    equilibrium rates open-loop, and replicates the run with seeds
    ``base.seed + k``.  A failing cell records its error instead of aborting
    the sweep.  Cells are independent; ``max_workers`` lets them run
    concurrently, with results merged in cell order either way.
    """
    if replications < 1:
        raise ValueError(f"replications must be at least 1, got {replications}")
    cells = list(product(desired_poas, mus, windows))

    def job(cell: tuple[float, float, int]) -> SweepCell:
        q, mu, w = cell
        return _run_cell(base, q, mu, int(w), replications, welfare_kind, keep_prob)

    if max_workers is not None and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(job, cells))
    return [job(c) for c in cells]
