from fractions import Fraction as Q

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from settlefl.economics import (
    OPTIMISTIC,
    SELECT_PARAMS,
    VALIDITY,
    Friction,
    FrictionWeights,
    GameParameters,
    ParticipantParams,
    StrategyCosts,
    StrategyProfile,
    baseline_costs,
    check_nash,
    commit_component,
    cost_breakdown,
    crossover_participants,
    crossover_rounds,
    friction,
    select_threshold,
    select_variant,
    statefl_cheaper,
    utility,
    with_param,
)
from settlefl.errors import ConfigInvalid, UnknownModel
from settlefl.scenario import ScenarioConfig, run_scenario

fractions = st.fractions(min_value=0, max_value=1000, max_denominator=50)
positive = st.fractions(min_value=Q(1, 50), max_value=1000, max_denominator=50)

# -- friction -------------------------------------------------------------------


def test_friction_examples():
    assert friction(Friction(0, 0, 0), FrictionWeights()) == 0
    assert friction(Friction(123, 456, 789), FrictionWeights(1, 0, 0)) == 123
    assert friction(Friction(10, 2, 3), FrictionWeights(Q(1, 2), 3, 5)) == 5 + 6 + 15


def test_friction_matches_scenario_report():
    cfg = ScenarioConfig(N=4, T=3, B=2, delta=500)
    rep = run_scenario(cfg)
    assert Q(rep.friction["value"]) == sum(rep.gas_by_function.values())
    assert rep.friction["T_p"] == 500
    assert Q(rep.friction["T_c"]) == 0


@given(fractions, fractions, fractions, positive, fractions, fractions, fractions)
def test_friction_linear(cg, tp, tc, wg, wp, wc, k):
    pi, w = Friction(cg, tp, tc), FrictionWeights(wg, wp, wc)
    assert friction(pi.scaled(k), w) == k * friction(pi, w)


def test_weights_validation():
    with pytest.raises(ConfigInvalid):
        FrictionWeights(0, 0, 0)
    with pytest.raises(ConfigInvalid):
        FrictionWeights(-1, 1, 0)


# -- variant selection -------------------------------------------------------------

COSTS = StrategyCosts(C_b=63_000, C_v=281_000, delta_w=86_400, delta_p=5)
WEIGHTS = FrictionWeights(w_g=1, w_p=3, w_c=1000)


def test_select_examples():
    assert select_variant(COSTS, FrictionWeights(1, 0, 1))[0] == OPTIMISTIC
    assert select_variant(StrategyCosts(5, 5, 10, 0), FrictionWeights(1, 1, 1))[0] == VALIDITY
    # tie stays optimistic
    choice, margin = select_variant(StrategyCosts(0, 10, 10, 0), FrictionWeights(1, 1, 0))
    assert (choice, margin) == (OPTIMISTIC, 0)


def brute_force_flips(param, lo, hi, steps=400):
    """Decisions along an exact rational grid; returns the list of flip intervals."""
    flips = []
    prev = None
    for i in range(steps + 1):
        x = lo + (hi - lo) * Q(i, steps)
        c, w = with_param(COSTS, WEIGHTS, param, x)
        choice = select_variant(c, w)[0]
        if prev is not None and choice != prev[1]:
            flips.append((prev[0], x))
        prev = (x, choice)
    return flips


@pytest.mark.parametrize("param", SELECT_PARAMS)
def test_single_flip_at_closed_form(param):
    t = select_threshold(COSTS, WEIGHTS, param)
    assert t is not None and t > 0
    flips = brute_force_flips(param, Q(0), 2 * t)
    assert len(flips) == 1
    lo, hi = flips[0]
    assert lo <= t <= hi
    # exactly at the threshold the margin is zero and the tie goes optimistic
    c, w = with_param(COSTS, WEIGHTS, param, t)
    assert select_variant(c, w) == (OPTIMISTIC, 0)


def test_threshold_none_when_param_irrelevant():
    assert select_threshold(StrategyCosts(1, 1, 0, 0), WEIGHTS, "w_p") is None
    assert select_threshold(COSTS, FrictionWeights(1, 0, 1), "delta_w") is None


@settings(max_examples=60)
@given(fractions, fractions, fractions, fractions, positive, fractions, fractions, fractions)
def test_select_monotone(cb, cv, dw, dp, wg, wp, wc, bump):
    costs, w = StrategyCosts(cb, cv, dw, dp), FrictionWeights(wg, wp, wc)
    before = select_variant(costs, w)[0]
    more_wp = select_variant(costs, FrictionWeights(wg, wp + bump, wc))[0]
    more_cv = select_variant(StrategyCosts(cb, cv + bump, dw, dp), w)[0]
    assert not (before == VALIDITY and more_wp == OPTIMISTIC)
    assert not (before == OPTIMISTIC and more_cv == VALIDITY)


# -- incentive game --------------------------------------------------------------


def test_example_utilities():
    g = GameParameters.example()
    assert utility(StrategyProfile.honest(1), g) == {"aggregator": 13, "P0": 4}
    assert utility(StrategyProfile("tamper", ("honest",)), g)["aggregator"] == 6
    assert utility(StrategyProfile("abort", ("honest",)), g)["aggregator"] == -3
    assert utility(StrategyProfile("honest", ("malicious",)), g)["P0"] == -1
    assert utility(StrategyProfile("honest", ("passive",)), g)["P0"] == 2


def test_example_is_equilibrium():
    rep = check_nash(GameParameters.example())
    assert rep.equilibrium and rep.condition and rep.violations == []
    assert rep.table["aggregator"] == {"honest": 13, "tamper": 6, "abort": -3}
    assert rep.table["participant"] == {"honest": 4, "malicious": -1, "passive": 2}


def test_slash_equal_to_gas_lists_passive():
    g = GameParameters(10, 4, 1, 1, 2, 2, 1, 2)
    rep = check_nash(g)
    assert not rep.equilibrium and rep.weak_equilibrium and not rep.condition
    assert [(d.player, d.strategy) for d in rep.violations] == [("participant", "passive")]


def test_huge_slash_is_equilibrium():
    g = GameParameters(Q(1, 100), Q(1, 100), Q(1, 100), 10**9, Q(1, 100), Q(1, 100), Q(1, 100), Q(1, 100))
    assert check_nash(g).equilibrium


def test_asymmetric_override_enumerates_each_slot():
    g = GameParameters(10, 4, 1, 3, 2, 2, 1, 2, n_participants=3, overrides=((1, ParticipantParams(2, 2, 5, 2)),))
    rep = check_nash(g)
    assert set(rep.table) == {"aggregator", "P0", "P1", "P2"}
    assert [(d.player, d.strategy) for d in rep.violations] == [("P1", "passive")]
    assert not rep.condition


def test_costly_commit_breaks_equilibrium():
    # commit cost beyond what the task pays: abort beats honest even with P_slash_agg > C_gas
    g = GameParameters(1, 1, 100, 2, 1, 1, 1, 1)
    rep = check_nash(g)
    assert rep.condition and not rep.equilibrium
    assert ("aggregator", "abort") in [(d.player, d.strategy) for d in rep.violations]


@settings(max_examples=40)
@given(st.tuples(*[positive] * 8), st.integers(1, 100))
def test_verdict_independent_of_participant_count(p, n):
    assert check_nash(GameParameters(*p, n_participants=1)).equilibrium == check_nash(
        GameParameters(*p, n_participants=n)
    ).equilibrium


@settings(max_examples=200)
@given(st.tuples(*[positive] * 8))
def test_slash_above_gas_gives_equilibrium(p):
    g = GameParameters(*p)
    assume(g.P_slash_agg > g.C_gas)
    # the aggregator must be willing to take the task at all
    assume(g.R_model + g.R_bonus >= g.C_commit)
    assert check_nash(g).equilibrium


def test_game_validation():
    with pytest.raises(ConfigInvalid):
        GameParameters(-1, 4, 1, 3, 2, 2, 1, 2)
    with pytest.raises(ConfigInvalid):
        GameParameters.example(0)
    with pytest.raises(ValueError):
        StrategyProfile("bribe", ("honest",))


# -- baseline costs ------------------------------------------------------------------


def test_cost_examples():
    assert commit_component("settlefl_cc", 50) == 3_150_000
    for N in (1, 100, 800):
        assert baseline_costs("statefl", N, 50) == 456_000 * N
    assert baseline_costs("statefl", 100, 3) == baseline_costs("statefl", 100, 300) == 45_600_000
    with pytest.raises(UnknownModel):
        baseline_costs("rollup", 1, 1)
    with pytest.raises(UnknownModel):
        cost_breakdown("zk", 1, 1)


def test_settlefl_cost_structure():
    a = baseline_costs("settlefl_cc", 800, 50)
    b = baseline_costs("settlefl_cc", 800, 51)
    assert b - a == 63_000
    assert baseline_costs("settlefl_cp", 800, 50) - a == 50 * (281_000 - 63_000)
    assert baseline_costs("bcfl", 10, 20) == 10 * baseline_costs("bcfl", 1, 20)


def test_crossover_points():
    assert statefl_cheaper(10, 400)
    assert not statefl_cheaper(200, 50)
    assert not statefl_cheaper(800, 50)
    assert crossover_participants(200) == Q(200 * 63_000, 456_000)
    assert crossover_rounds(25) == Q(25 * 456_000, 63_000)


@settings(max_examples=200)
@given(st.integers(1, 2000), st.integers(1, 2000))
def test_crossover_closed_form(N, T):
    assert statefl_cheaper(N, T) == (N < crossover_participants(T))
