from __future__ import annotations

import math

import numpy as np
import pytest

from biphoton_synth.assembly import MonoblockType, overlay
from biphoton_synth.errors import BiphotonSynthError, InvalidStrategy
from biphoton_synth.quantum import BiphotonState, SettingsVariant, joint_distribution
from biphoton_synth.strategy import (
    ALL_DETERMINISTIC, ALL_LOCAL_RULES, ALWAYS_FORWARD, CLASSICAL_BOUND, QUANTUM_VALUE,
    TYPE_PAIRS, MonteCarloEstimate, QuantumStrategy, RandomizedClassicalStrategy, draw_types,
    enumerate_deterministic, estimate_mc, exact_value, optimal_deterministic, parse_strategy,
    pool, replicate_mc, replication_seeds, run_assembly, step
)

A, B = MonoblockType.A, MonoblockType.B


@pytest.fixture
def quantum_strategy():
    return QuantumStrategy.for_variant(SettingsVariant.CORRECTED)


@pytest.fixture
def random_mix():
    weights = np.random.default_rng(5).dirichlet(np.ones(16))
    return RandomizedClassicalStrategy(tuple(weights))


def test_local_rules_and_deterministic_strategies():
    assert len(ALL_LOCAL_RULES) == 4
    assert len(ALL_DETERMINISTIC) == 16
    assert len({s.spec for s in ALL_DETERMINISTIC}) == 16
    assert ALWAYS_FORWARD.spec == "det:++++"


def test_always_forward_reaches_classical_bound():
    value = exact_value(ALWAYS_FORWARD)
    assert value.exact_noncr == 0.75
    assert value.chsh_S == 2.0
    for c1, c2 in TYPE_PAIRS:
        assert step(ALWAYS_FORWARD, c1, c2, np.random.default_rng(0)) == (1, 1)


def test_enumeration_gives_classical_bound():
    table = enumerate_deterministic()
    assert len(table) == 16
    values = [v.exact_noncr for _, v in table]
    assert max(values) == CLASSICAL_BOUND == 0.75
    assert min(values) == 0.25
    assert sorted(set(values)) == [0.25, 0.75]


def test_enumeration_bracket_identity():
    for strategy, value in enumerate_deterministic():
        assert strategy.chsh_S == strategy.bracket_form
        assert strategy.chsh_S in (-2, 2)
        assert value.exact_noncr == (1 + strategy.chsh_S / 4) / 2


def test_optimal_deterministic_has_ties():
    optimal = optimal_deterministic()
    assert ALWAYS_FORWARD in optimal
    assert len(optimal) == 8
    assert all(s.value().exact_noncr == 0.75 for s in optimal)


def test_quantum_corrected_value(quantum_strategy):
    value = exact_value(quantum_strategy)
    assert value.exact_noncr == pytest.approx((2 + math.sqrt(2)) / 4, abs=1e-9)
    assert value.exact_noncr == pytest.approx(QUANTUM_VALUE, abs=1e-12)
    assert value.chsh_S == pytest.approx(2 * math.sqrt(2), abs=1e-9)


def test_quantum_paper_verbatim_value():
    value = exact_value(QuantumStrategy.for_variant(SettingsVariant.PAPER_VERBATIM))
    assert value.exact_noncr == pytest.approx((2 - math.sqrt(2)) / 4, abs=1e-9)


def test_quantum_paper_verbatim_on_singlet_recovers_quantum_value():
    strategy = QuantumStrategy.for_variant(
        SettingsVariant.PAPER_VERBATIM, state=BiphotonState.singlet()
    )
    assert strategy.value().exact_noncr == pytest.approx(QUANTUM_VALUE, abs=1e-9)


def test_quantum_over_classical_ratio(quantum_strategy):
    ratio = quantum_strategy.value().exact_noncr / ALWAYS_FORWARD.value().exact_noncr
    assert ratio == pytest.approx((2 + math.sqrt(2)) / 3, abs=1e-12)
    assert ratio == pytest.approx(1.13807, abs=1e-5)


def test_uniform_mix_value():
    value = RandomizedClassicalStrategy.uniform().value()
    assert value.exact_noncr == pytest.approx(0.5, abs=1e-12)
    assert value.chsh_S == pytest.approx(0.0, abs=1e-12)


def test_randomized_strategies_never_beat_classical_bound():
    rng = np.random.default_rng(99)
    for _ in range(200):
        strategy = RandomizedClassicalStrategy(tuple(rng.dirichlet(np.ones(16))))
        value = strategy.value()
        assert value.exact_noncr <= CLASSICAL_BOUND + 1e-12
        assert value.exact_noncr == pytest.approx((1 + value.chsh_S / 4) / 2, abs=1e-12)


def test_value_matches_chsh_for_every_strategy_class(random_mix, quantum_strategy):
    strategies = [*ALL_DETERMINISTIC, random_mix, quantum_strategy]
    strategies += [
        QuantumStrategy.for_variant(SettingsVariant.PAPER_VERBATIM),
        parse_strategy("quantum:theta=0.3"),
        parse_strategy("quantum:theta=1.2:singlet"),
    ]
    for strategy in strategies:
        value = strategy.value()
        assert 0.0 <= value.exact_noncr <= 1.0
        assert value.exact_noncr == pytest.approx((1 + value.chsh_S / 4) / 2, abs=1e-12)


def test_randomized_strategy_validates_weights():
    with pytest.raises(InvalidStrategy):
        RandomizedClassicalStrategy((1.0,))
    with pytest.raises(InvalidStrategy):
        RandomizedClassicalStrategy(tuple([0.5, -0.5] + [1 / 14] * 14))
    with pytest.raises(InvalidStrategy):
        RandomizedClassicalStrategy(tuple([0.1] * 16))


def test_quantum_step_consumes_one_uniform(quantum_strategy):
    dist = joint_distribution(quantum_strategy.state, *quantum_strategy.observables(A, B))
    rng1, rng2 = np.random.default_rng(31), np.random.default_rng(31)
    for _ in range(100):
        pair = quantum_strategy.step(A, B, rng1)
        s1, s2 = dist.invert(np.array([rng2.random()]))
        assert pair == (int(s1[0]), int(s2[0]))


@pytest.mark.parametrize("make", [
    lambda: ALWAYS_FORWARD,
    lambda: RandomizedClassicalStrategy.uniform(),
    lambda: QuantumStrategy.for_variant(),
])
def test_step_sequence_matches_batch(make):
    strategy = make()
    types1, types2 = draw_types(200, np.random.default_rng(1))
    rng = np.random.default_rng(2)
    one_by_one = [
        strategy.step(MonoblockType(int(c1)), MonoblockType(int(c2)), rng)
        for c1, c2 in zip(types1, types2)
    ]
    s1, s2 = strategy.shifts(types1, types2, np.random.default_rng(2))
    assert one_by_one == list(zip(s1.tolist(), s2.tolist()))


def test_quantum_steps_follow_born_rule(quantum_strategy):
    n = 10 ** 5
    types1 = np.full(n, A, dtype=np.int8)
    types2 = np.full(n, B, dtype=np.int8)
    s1, s2 = quantum_strategy.shifts(types1, types2, np.random.default_rng(4))
    assert np.mean(s1 == s2) == pytest.approx((1 + 1 / math.sqrt(2)) / 2, abs=0.005)


def test_run_assembly_is_deterministic_per_seed(quantum_strategy):
    first = run_assembly(quantum_strategy, 1000, np.random.default_rng(12))
    second = run_assembly(quantum_strategy, 1000, np.random.default_rng(12))
    third = run_assembly(quantum_strategy, 1000, np.random.default_rng(13))
    assert first == second
    assert first != third


def test_run_assembly_with_no_steps():
    chain1, chain2 = run_assembly(ALWAYS_FORWARD, 0, np.random.default_rng(0))
    assert chain1.length == chain2.length == 0
    with pytest.raises(BiphotonSynthError):
        run_assembly(ALWAYS_FORWARD, -1, np.random.default_rng(0))


@pytest.mark.parametrize("seed", [11, 22, 33])
def test_quantum_monte_carlo_million_steps(quantum_strategy, seed):
    report = overlay(*run_assembly(quantum_strategy, 10 ** 6, np.random.default_rng(seed)))
    assert report.noncr_fraction == pytest.approx(0.853553, abs=0.002)


@pytest.mark.parametrize("seed", [11, 22, 33])
def test_classical_monte_carlo_million_steps(seed):
    report = overlay(*run_assembly(ALWAYS_FORWARD, 10 ** 6, np.random.default_rng(seed)))
    assert report.noncr_fraction == pytest.approx(0.75, abs=0.002)


def test_estimate_stderr():
    classical = estimate_mc(ALWAYS_FORWARD, 10 ** 6, np.random.default_rng(11))
    assert classical.steps == 10 ** 6
    assert classical.stderr == pytest.approx(0.000433, abs=1e-5)

    quantum = estimate_mc(QuantumStrategy.for_variant(), 10 ** 6, np.random.default_rng(11))
    assert quantum.stderr == pytest.approx(0.000354, abs=1e-5)


def test_estimate_single_step_is_degenerate(quantum_strategy):
    estimate = estimate_mc(quantum_strategy, 1, np.random.default_rng(0))
    assert estimate.mean in (0.0, 1.0)
    assert estimate.stderr == 0.0
    with pytest.raises(BiphotonSynthError):
        estimate_mc(quantum_strategy, 0, np.random.default_rng(0))


def test_monte_carlo_agrees_with_exact_values(random_mix, quantum_strategy):
    strategies = [
        ALWAYS_FORWARD, ALL_DETERMINISTIC[5], RandomizedClassicalStrategy.uniform(), random_mix,
        quantum_strategy,
    ]
    for seed, strategy in zip((11, 22, 33, 44, 55), strategies):
        estimate = estimate_mc(strategy, 2 * 10 ** 5, np.random.default_rng(seed))
        assert abs(estimate.mean - strategy.value().exact_noncr) <= 4 * estimate.stderr + 1e-12


def test_replications_use_consecutive_seeds(quantum_strategy):
    assert replication_seeds(7, 3) == [7, 8, 9]
    estimates = replicate_mc(quantum_strategy, 1000, 7, 3)
    assert len(estimates) == 3
    for offset, estimate in enumerate(estimates):
        assert estimate == estimate_mc(quantum_strategy, 1000, np.random.default_rng(7 + offset))
    with pytest.raises(BiphotonSynthError):
        replicate_mc(quantum_strategy, 1000, 7, 0)


def test_pool():
    pooled = pool([MonteCarloEstimate(0.8, 0.0, 100), MonteCarloEstimate(0.9, 0.0, 100)])
    assert pooled.mean == pytest.approx(0.85)
    assert pooled.steps == 200
    assert pooled.stderr == pytest.approx(math.sqrt(0.85 * 0.15 / 200))


@pytest.mark.parametrize("spec", [
    "det:++++",
    "det:+-+-",
    "quantum:corrected",
    "quantum:paper-verbatim",
    "quantum:corrected:singlet",
    "quantum:theta=0.5",
])
def test_parse_strategy_round_trips_spec(spec):
    assert parse_strategy(spec).spec == spec


def test_parse_strategy_mix(random_mix):
    assert parse_strategy(random_mix.spec) == random_mix
    assert parse_strategy("mix:" + ",".join(["0.0625"] * 16)) == RandomizedClassicalStrategy(
        tuple([0.0625] * 16)
    )


def test_parse_strategy_accepts_unicode_minus():
    assert parse_strategy("det:+−+−") == parse_strategy("det:+-+-")


@pytest.mark.parametrize("spec", [
    "det:+++", "det:++x+", "mix:1,2", "mix:a,b", "quantum:nope", "quantum:theta=x",
    "quantum:corrected:psi", "classical", "foo:bar",
])
def test_parse_strategy_rejects(spec):
    with pytest.raises(InvalidStrategy):
        parse_strategy(spec)
