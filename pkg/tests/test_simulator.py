"""Slotted simulator: estimator, queue physics, dropping statistics, sweeps.

Statistical assertions use 3-to-4 sigma bands around queueing-theory
quantities (Poisson thinning, M/M/1 sojourn) with fixed seeds, so they are
deterministic in practice.
"""

import math
from collections import deque
from dataclasses import replace

import numpy as np
import pytest

from mm1game import (
    DesignSpec,
    GameConfig,
    LinearPolicy,
    NoDrop,
    OverloadError,
    QueueMode,
    RateProfile,
    SimConfig,
    WelfareKind,
    design_linear,
    empirical_poa,
    estimate_rate,
    ne_closed_form,
    poa_of_equilibrium,
    run,
    sweep,
    utility,
)

CFG = GameConfig.uniform(6.0, 2.0, 2)


# ------------------------------------------------------------------- estimator


def test_estimate_rate_means_the_tail():
    assert estimate_rate([10, 12, 8], 3) == pytest.approx(10.0)
    assert estimate_rate([1, 1, 99, 101], 2) == pytest.approx(100.0)
    assert estimate_rate([7], 100) == pytest.approx(7.0)
    assert estimate_rate(deque([3, 5]), 2) == pytest.approx(4.0)


def test_estimate_rate_guards():
    with pytest.raises(ValueError):
        estimate_rate([], 3)
    with pytest.raises(ValueError):
        estimate_rate([1.0], 0)


def test_estimate_rate_constant_stream_is_exact():
    assert estimate_rate([4.0] * 50, 7) == pytest.approx(4.0)


# ------------------------------------------------------------------ basic runs


def test_sim_config_validation():
    with pytest.raises(ValueError):
        SimConfig(game=CFG, policy=NoDrop(), input_rates=RateProfile((1.0,)))
    with pytest.raises(ValueError):
        SimConfig(game=CFG, policy=NoDrop(), input_rates=RateProfile((1.0, 1.0)), window=0)
    with pytest.raises(ValueError):
        SimConfig(
            game=CFG, policy=NoDrop(), input_rates=RateProfile((1.0, 1.0)),
            slots=3, window=5,
        )
    with pytest.raises(ValueError):
        SimConfig(
            game=CFG, policy=NoDrop(), input_rates=RateProfile((1.0, 1.0)), queue_cap=0
        )


def test_same_seed_same_report():
    sim = SimConfig(
        game=GameConfig.uniform(20.0, 2.0, 2),
        policy=LinearPolicy(9.0, 14.0),
        input_rates=RateProfile((5.0, 5.0)),
        slots=2000,
        window=3,
        seed=99,
    )
    assert run(sim) == run(sim)
    other = run(replace(sim, seed=100))
    assert other != run(sim)


def test_zero_input_is_a_zero_throughput_report():
    sim = SimConfig(
        game=CFG, policy=NoDrop(), input_rates=RateProfile((0.0, 0.0)), slots=200
    )
    rep = run(sim)
    assert rep.goodput == (0.0, 0.0)
    assert rep.power == (0.0, 0.0)
    assert rep.mean_delay == (0.0, 0.0)
    assert rep.log_welfare == -math.inf
    assert rep.empirical_poa == math.inf


def test_accepted_never_exceeds_arrivals():
    sim = SimConfig(
        game=GameConfig.uniform(50.0, 2.0, 3),
        policy=LinearPolicy(20.0, 30.0),
        input_rates=RateProfile((8.0, 8.0, 8.0)),
        slots=4000,
        seed=1,
        queue_mode=QueueMode.ANALYTIC_DELAY,
    )
    rep = run(sim)
    assert all(a <= b for a, b in zip(rep.accepted, rep.arrivals))
    # the ramp sheds enough here that goodput sits well below the offered rate
    assert all(g <= r for g, r in zip(rep.goodput, rep.input_rates))


def test_dropping_is_binomially_unbiased():
    """Accepted counts match the thinned-Poisson mean within 3 sigma."""
    sim = SimConfig(
        game=GameConfig.uniform(30.0, 2.0, 2),
        policy=LinearPolicy(4.0, 16.0),
        input_rates=RateProfile((3.0, 5.0)),
        slots=20_000,
        window=1,
        seed=4,
        queue_mode=QueueMode.ANALYTIC_DELAY,
    )
    rep = run(sim)
    keep = 1.0 - np.asarray(rep.drop_probs[rep.warmup_slots :])
    kept_mass = float(keep.sum())
    for i, lam in enumerate(rep.input_rates):
        mean = lam * kept_mass
        assert abs(rep.accepted[i] - mean) <= 3.0 * math.sqrt(mean)


def test_estimator_tracks_the_true_total():
    sim = SimConfig(
        game=GameConfig.uniform(30.0, 2.0, 2),
        policy=NoDrop(),
        input_rates=RateProfile((1.5, 2.5)),
        slots=20_000,
        window=5,
        seed=12,
        queue_mode=QueueMode.ANALYTIC_DELAY,
    )
    rep = run(sim)
    ests = np.asarray(rep.estimated_rates[rep.warmup_slots :])
    total = 4.0
    stderr = math.sqrt(total / ests.size)
    assert abs(float(ests.mean()) - total) <= 4.0 * stderr


def test_warmup_slots_are_discarded():
    sim = SimConfig(
        game=CFG, policy=NoDrop(), input_rates=RateProfile((1.0, 1.0)),
        slots=500, window=50, seed=3,
    )
    rep = run(sim)
    assert rep.warmup_slots == 50
    counted = sum(rep.slot_arrivals[50:])
    assert sum(rep.arrivals) == counted


# --------------------------------------------------------------- queue physics


def test_event_queue_reproduces_mm1_delay():
    # utilization 2/3; mean sojourn should be 1/(30 - 20) = 0.1
    sim = SimConfig(
        game=GameConfig.uniform(30.0, 2.0, 2),
        policy=NoDrop(),
        input_rates=RateProfile((12.0, 8.0)),
        slots=8000,
        seed=21,
    )
    rep = run(sim)
    pooled = sum(d * a for d, a in zip(rep.mean_delay, rep.accepted)) / sum(rep.accepted)
    assert pooled == pytest.approx(0.1, rel=0.05)


def test_analytic_and_event_delays_agree_at_scale():
    base = SimConfig(
        game=GameConfig.uniform(500.0, 2.0, 2),
        policy=NoDrop(),
        input_rates=RateProfile((200.0, 200.0)),
        slots=1500,
        seed=7,
        queue_mode=QueueMode.ANALYTIC_DELAY,
    )
    ra = run(base)
    re = run(replace(base, queue_mode=QueueMode.EVENT_QUEUE))

    def pooled(rep):
        return sum(d * a for d, a in zip(rep.mean_delay, rep.accepted)) / sum(rep.accepted)

    assert pooled(ra) == pytest.approx(pooled(re), rel=0.10)


def test_analytic_mode_flags_overload():
    sim = SimConfig(
        game=CFG, policy=NoDrop(), input_rates=RateProfile((4.0, 4.0)),
        slots=2000, seed=0, queue_mode=QueueMode.ANALYTIC_DELAY,
    )
    with pytest.raises(OverloadError):
        run(sim)


def test_event_mode_flags_sustained_backlog():
    sim = SimConfig(
        game=GameConfig.uniform(0.5, 2.0, 2),
        policy=NoDrop(),
        input_rates=RateProfile((1.0, 1.0)),
        slots=5000,
        seed=0,
        queue_cap=50,
    )
    with pytest.raises(OverloadError):
        run(sim)


# --------------------------------------------------------------- empirical PoA


def _report_from_analytic_profile(profile, policy, cfg):
    """Build a noiseless report whose measurements equal the steady-state values."""
    from mm1game import SimReport, effective_rates, keep_probability

    eff = effective_rates(profile, policy)
    delay = 1.0 / (cfg.mu - eff.total)
    power = tuple(
        (g ** a) / delay for g, a in zip(eff.rates, cfg.alphas)
    )
    return SimReport(
        input_rates=profile.rates,
        arrivals=(0,) * cfg.m,
        accepted=(0,) * cfg.m,
        goodput=eff.rates,
        mean_delay=(delay,) * cfg.m,
        power=power,
        sum_welfare=sum(power),
        log_welfare=(
            sum(math.log(p) for p in power) if all(p > 0 for p in power) else -math.inf
        ),
        empirical_poa=math.nan,
        estimated_rates=(),
        drop_probs=(),
        slot_arrivals=(),
        slots=0,
        warmup_slots=0,
    )


def test_empirical_poa_matches_analytic_on_noiseless_input():
    design = design_linear(DesignSpec(CFG, epsilon=0.05, keep_prob=0.9, target_effective_total=3.9))
    rep = _report_from_analytic_profile(design.predicted_ne, design.policy, CFG)
    want = poa_of_equilibrium(design.predicted_ne, design.policy, CFG, WelfareKind.SUM_LOG_UTILITY)
    assert empirical_poa(rep, CFG, WelfareKind.SUM_LOG_UTILITY) == pytest.approx(want, abs=1e-6)


def test_empirical_poa_is_one_at_each_kinds_own_optimum():
    from mm1game import social_optimum_log, social_optimum_sum

    log_rep = _report_from_analytic_profile(social_optimum_log(CFG), NoDrop(), CFG)
    assert empirical_poa(log_rep, CFG, WelfareKind.SUM_LOG_UTILITY) == pytest.approx(
        1.0, abs=1e-12
    )
    sum_profile, _ = social_optimum_sum(CFG)
    sum_rep = _report_from_analytic_profile(sum_profile, NoDrop(), CFG)
    assert empirical_poa(sum_rep, CFG, WelfareKind.SUM_UTILITY) == pytest.approx(
        1.0, abs=1e-12
    )
    # the even split is not the sum-optimal shape for exponents above one
    assert empirical_poa(log_rep, CFG, WelfareKind.SUM_UTILITY) == pytest.approx(2.0)


def test_empirical_poa_zero_power_is_infinite():
    rep = _report_from_analytic_profile(
        RateProfile((2.0, 2.0)), NoDrop(), CFG
    )
    rep = replace(rep, power=(0.0, rep.power[1]))
    assert empirical_poa(rep, CFG, WelfareKind.SUM_LOG_UTILITY) == math.inf


def test_simulated_equilibrium_poa_lands_near_the_design():
    game = GameConfig.uniform(50_000.0, 2.0, 3)
    design = design_linear(DesignSpec(game, epsilon=0.05))
    sim = SimConfig(
        game=game,
        policy=design.policy,
        input_rates=design.predicted_ne,
        slots=10_000,
        window=1,
        seed=9,
        queue_mode=QueueMode.ANALYTIC_DELAY,
    )
    rep = run(sim)
    assert 1.0 <= rep.empirical_poa <= 1.3


# ----------------------------------------------------------------------- sweep


def test_single_cell_sweep_reduces_to_runs():
    game = GameConfig.uniform(800.0, 2.0, 2)
    base = SimConfig(
        game=game, policy=NoDrop(), input_rates=RateProfile((0.0, 0.0)),
        slots=2000, window=1, seed=31, queue_mode=QueueMode.ANALYTIC_DELAY,
    )
    cells = sweep(base, desired_poas=[1.1], mus=[800.0], windows=[1], replications=3)
    assert len(cells) == 1
    cell = cells[0]
    assert cell.error is None

    design = design_linear(DesignSpec(game, epsilon=0.1))
    vals = []
    for k in range(3):
        rep = run(
            replace(base, policy=design.policy, input_rates=design.predicted_ne, seed=31 + k)
        )
        vals.append(empirical_poa(rep, game, WelfareKind.SUM_LOG_UTILITY))
    assert cell.mean_poa == pytest.approx(sum(vals) / 3, rel=1e-12)


def test_sweep_records_per_cell_errors():
    base = SimConfig(
        game=CFG, policy=NoDrop(), input_rates=RateProfile((0.0, 0.0)),
        slots=500, window=1, seed=0, queue_mode=QueueMode.ANALYTIC_DELAY,
    )
    cells = sweep(
        base,
        desired_poas=[1.5],  # below the plain-sum floor of 2 for this game
        mus=[600.0],
        windows=[1],
        replications=2,
        welfare_kind=WelfareKind.SUM_UTILITY,
    )
    assert len(cells) == 1
    assert cells[0].error is not None
    assert math.isnan(cells[0].mean_poa)


def test_sweep_is_deterministic_and_thread_safe():
    base = SimConfig(
        game=GameConfig.uniform(600.0, 2.0, 3),
        policy=NoDrop(),
        input_rates=RateProfile((0.0, 0.0, 0.0)),
        slots=1000,
        window=1,
        seed=5,
        queue_mode=QueueMode.ANALYTIC_DELAY,
    )
    serial = sweep(base, [1.05, 1.2], [600.0], [1, 10], replications=2)
    threaded = sweep(base, [1.05, 1.2], [600.0], [1, 10], replications=2, max_workers=4)
    assert serial == threaded
    again = sweep(base, [1.05, 1.2], [600.0], [1, 10], replications=2)
    assert serial == again


def test_sweep_validates_replications():
    base = SimConfig(
        game=CFG, policy=NoDrop(), input_rates=RateProfile((0.0, 0.0)), slots=100
    )
    with pytest.raises(ValueError):
        sweep(base, [1.1], [600.0], [1], replications=0)
