"""Friction, variant selection, baseline cost models and the incentive game.

All arithmetic that feeds a decision is exact (``Fraction``).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from typing import Iterable

from .chain import GasTable, Pricing, default_gas_table
from .errors import ConfigInvalid, UnknownModel

Q = Fraction


def _q(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(str(x)) if isinstance(x, float) else Fraction(x)


# ---------------------------------------------------------------------------
# friction and variant selection


@dataclass(frozen=True)
class FrictionWeights:
    w_g: Fraction = Q(1)
    w_p: Fraction = Q(0)
    w_c: Fraction = Q(0)

    def __post_init__(self):
        for name in ("w_g", "w_p", "w_c"):
            v = _q(getattr(self, name))
            if v < 0:
                raise ConfigInvalid(f"{name} must be non-negative")
            object.__setattr__(self, name, v)
        if not (self.w_g or self.w_p or self.w_c):
            raise ConfigInvalid("at least one friction weight must be positive")


@dataclass(frozen=True)
class Friction:
    """The three friction components: on-chain cost, protocol delay, compute latency."""

    C_g: Fraction
    T_p: Fraction
    T_c: Fraction

    def scaled(self, k) -> "Friction":
        k = _q(k)
        return Friction(_q(self.C_g) * k, _q(self.T_p) * k, _q(self.T_c) * k)


def friction(pi: Friction, w: FrictionWeights) -> Fraction:
    return w.w_g * _q(pi.C_g) + w.w_p * _q(pi.T_p) + w.w_c * _q(pi.T_c)


@dataclass(frozen=True)
class StrategyCosts:
    C_b: Fraction  # optimistic base gas
    C_v: Fraction  # validity gas
    delta_w: Fraction  # dispute window, seconds
    delta_p: Fraction  # proof generation, seconds

    def __post_init__(self):
        for name in ("C_b", "C_v", "delta_w", "delta_p"):
            v = _q(getattr(self, name))
            if v < 0:
                raise ConfigInvalid(f"{name} must be non-negative")
            object.__setattr__(self, name, v)


OPTIMISTIC = "optimistic"
VALIDITY = "validity"


def select_variant(costs: StrategyCosts, w: FrictionWeights) -> tuple[str, Fraction]:
    """Pick validity iff waiting costs more than proving; ties stay optimistic.

    Returns the choice and the margin LHS - RHS.
    """
    lhs = w.w_p * costs.delta_w
    rhs = w.w_g * (costs.C_v - costs.C_b) + w.w_c * costs.delta_p
    return (VALIDITY if lhs > rhs else OPTIMISTIC), lhs - rhs


SELECT_PARAMS = ("w_p", "delta_w", "w_g", "C_v", "C_b", "w_c", "delta_p")


def select_threshold(costs: StrategyCosts, w: FrictionWeights, param: str) -> Fraction | None:
    """Value of ``param`` at which lhs == rhs with everything else fixed.

    None when the margin does not depend on ``param``.
    """
    wp, dw, wg, cv, cb, wc, dp = (
        w.w_p, costs.delta_w, w.w_g, costs.C_v, costs.C_b, w.w_c, costs.delta_p,
    )
    diff = cv - cb
    if param == "w_p":
        return None if dw == 0 else (wg * diff + wc * dp) / dw
    if param == "delta_w":
        return None if wp == 0 else (wg * diff + wc * dp) / wp
    if param == "w_g":
        return None if diff == 0 else (wp * dw - wc * dp) / diff
    if param == "C_v":
        return None if wg == 0 else cb + (wp * dw - wc * dp) / wg
    if param == "C_b":
        return None if wg == 0 else cv - (wp * dw - wc * dp) / wg
    if param == "w_c":
        return None if dp == 0 else (wp * dw - wg * diff) / dp
    if param == "delta_p":
        return None if wc == 0 else (wp * dw - wg * diff) / wc
    raise KeyError(param)


def with_param(costs: StrategyCosts, w: FrictionWeights, param: str, value) -> tuple[StrategyCosts, FrictionWeights]:
    if param in ("w_p", "w_g", "w_c"):
        return costs, replace(w, **{param: _q(value)})
    return replace(costs, **{param: _q(value)}), w


# ---------------------------------------------------------------------------
# incentive game

AGG_STRATEGIES = ("honest", "tamper", "abort")
PARTICIPANT_STRATEGIES = ("honest", "malicious", "passive")


@dataclass(frozen=True)
class ParticipantParams:
    R_reward: Fraction
    R_steal: Fraction
    C_gas: Fraction
    P_slash: Fraction


@dataclass(frozen=True)
class GameParameters:
    R_model: Fraction
    R_bonus: Fraction
    C_commit: Fraction
    P_slash_agg: Fraction
    R_reward: Fraction
    R_steal: Fraction
    C_gas: Fraction
    P_slash_i: Fraction
    n_participants: int = 1
    # slot -> ParticipantParams for asymmetric games
    overrides: tuple[tuple[int, ParticipantParams], ...] = ()

    def __post_init__(self):
        for name in ("R_model", "R_bonus", "C_commit", "P_slash_agg", "R_reward", "R_steal", "C_gas", "P_slash_i"):
            v = _q(getattr(self, name))
            if v < 0:
                raise ConfigInvalid(f"{name} must be non-negative")
            object.__setattr__(self, name, v)
        if self.n_participants < 1:
            raise ConfigInvalid("need at least one participant")

    @classmethod
    def example(cls, n_participants: int = 1) -> "GameParameters":
        return cls(10, 4, 1, 3, 2, 2, 1, 2, n_participants)

    def participant(self, i: int) -> ParticipantParams:
        for slot, pp in self.overrides:
            if slot == i:
                return pp
        return ParticipantParams(self.R_reward, self.R_steal, self.C_gas, self.P_slash_i)

    @property
    def symmetric(self) -> bool:
        return not self.overrides

    def to_dict(self) -> dict:
        d = {k: str(v) for k, v in asdict(self).items() if k not in ("overrides", "n_participants")}
        d["n_participants"] = self.n_participants
        return d


@dataclass(frozen=True)
class StrategyProfile:
    s_agg: str
    s_participants: tuple[str, ...]

    def __post_init__(self):
        if self.s_agg not in AGG_STRATEGIES:
            raise ValueError(f"unknown aggregator strategy {self.s_agg!r}")
        for s in self.s_participants:
            if s not in PARTICIPANT_STRATEGIES:
                raise ValueError(f"unknown participant strategy {s!r}")

    @classmethod
    def honest(cls, n: int) -> "StrategyProfile":
        return cls("honest", ("honest",) * n)

    # indicator resolution
    @property
    def I_caught(self) -> int:
        """Some participant verifies, so a deviating aggregator is caught."""
        return int(any(s == "honest" for s in self.s_participants))

    def I_chal(self, i: int) -> int:
        return int(self.s_participants[i] == "honest")

    def I_fail(self, i: int) -> int:
        """An honest aggregator counters every false challenge."""
        return int(self.s_agg == "honest")


def utility(profile: StrategyProfile, params: GameParameters) -> dict[str, Fraction]:
    g = params
    if profile.s_agg == "honest":
        u_agg = g.R_model + g.R_bonus - g.C_commit
    elif profile.s_agg == "tamper":
        u_agg = g.R_model - g.C_commit - profile.I_caught * g.P_slash_agg
    else:
        u_agg = -profile.I_caught * g.P_slash_agg
    out = {"aggregator": u_agg}
    for i, s in enumerate(profile.s_participants):
        pp = params.participant(i)
        if s == "honest":
            u = pp.R_reward + profile.I_chal(i) * g.P_slash_agg - pp.C_gas
        elif s == "malicious":
            fail = profile.I_fail(i)
            u = pp.R_reward + (1 - fail) * pp.R_steal - fail * pp.P_slash - pp.C_gas
        else:
            u = pp.R_reward
        out[f"P{i}"] = u
    return out


@dataclass
class Deviation:
    player: str
    strategy: str
    utility: Fraction
    honest_utility: Fraction

    @property
    def gain(self) -> Fraction:
        return self.utility - self.honest_utility


@dataclass
class NashReport:
    equilibrium: bool
    weak_equilibrium: bool
    condition: bool
    violations: list[Deviation] = field(default_factory=list)
    weak_violations: list[Deviation] = field(default_factory=list)
    table: dict[str, dict[str, Fraction]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        def dev(d: Deviation):
            return {"player": d.player, "strategy": d.strategy, "utility": str(d.utility), "honest": str(d.honest_utility)}

        return {
            "equilibrium": self.equilibrium,
            "weak_equilibrium": self.weak_equilibrium,
            "condition_P_slash_agg_gt_C_gas": self.condition,
            "violations": [dev(d) for d in self.violations],
            "weak_violations": [dev(d) for d in self.weak_violations],
            "utilities": {k: {s: str(u) for s, u in v.items()} for k, v in self.table.items()},
        }


def check_nash(params: GameParameters) -> NashReport:
    """Enumerate unilateral deviations from the all-honest profile.

    ``equilibrium`` requires every deviation to be strictly worse;
    ``weak_equilibrium`` only that none is strictly better.
    """
    n = params.n_participants
    base = StrategyProfile.honest(n)
    u0 = utility(base, params)
    table: dict[str, dict[str, Fraction]] = {"aggregator": {"honest": u0["aggregator"]}}
    strict: list[Deviation] = []
    weak: list[Deviation] = []

    def record(player: str, strategy: str, u: Fraction, honest: Fraction):
        table[player][strategy] = u
        if u >= honest:
            strict.append(Deviation(player, strategy, u, honest))
        if u > honest:
            weak.append(Deviation(player, strategy, u, honest))

    for s in AGG_STRATEGIES[1:]:
        u = utility(StrategyProfile(s, base.s_participants), params)["aggregator"]
        record("aggregator", s, u, u0["aggregator"])
    # symmetric participants are interchangeable: one representative suffices
    slots: Iterable[int] = range(1) if params.symmetric else range(n)
    for i in slots:
        key = "participant" if params.symmetric else f"P{i}"
        table[key] = {"honest": u0[f"P{i}"]}
        for s in PARTICIPANT_STRATEGIES[1:]:
            sp = list(base.s_participants)
            sp[i] = s
            u = utility(StrategyProfile("honest", tuple(sp)), params)[f"P{i}"]
            record(key, s, u, u0[f"P{i}"])
    condition = all(params.P_slash_agg > params.participant(i).C_gas for i in range(n))
    return NashReport(not strict, not weak, condition, strict, weak, table)


# ---------------------------------------------------------------------------
# baseline cost models

MODELS = ("settlefl_cc", "settlefl_cp", "statefl", "bcfl")


def commit_component(model: str, T: int, gas: GasTable | None = None) -> int:
    gas = gas or default_gas_table()
    if model == "settlefl_cc":
        return T * gas.commit_cc
    if model == "settlefl_cp":
        return T * gas.commit_cp
    raise UnknownModel(model)


def baseline_costs(model: str, N: int, T: int, gas: GasTable | None = None, B: int = 50) -> int:
    """Total gas of a full honest task under each model."""
    gas = gas or default_gas_table()
    if model in ("settlefl_cc", "settlefl_cp"):
        batches = -(-N // B)
        return gas.create + commit_component(model, T, gas) + gas.finalize + batches * gas.distribute(B)
    if model == "statefl":
        return gas.statefl_per_participant * N
    if model == "bcfl":
        return gas.bcfl_per_participant_round * N * T
    raise UnknownModel(model)


def statefl_cheaper(N: int, T: int, gas: GasTable | None = None, model: str = "settlefl_cc") -> bool:
    """Whether StateFL undercuts SettleFL's per-round commitment cost.

    Follows the comparison plotted for the two systems: SettleFL's cost is
    its per-round commit gas (flat in N), StateFL's is per participant.
    """
    gas = gas or default_gas_table()
    return baseline_costs("statefl", N, T, gas) < commit_component(model, T, gas)


def crossover_participants(T: int, gas: GasTable | None = None, model: str = "settlefl_cc") -> Fraction:
    """N* where StateFL equals the commit component at T rounds."""
    gas = gas or default_gas_table()
    return Fraction(commit_component(model, T, gas), gas.statefl_per_participant)


def crossover_rounds(N: int, gas: GasTable | None = None, model: str = "settlefl_cc") -> Fraction:
    gas = gas or default_gas_table()
    per_round = commit_component(model, 1, gas)
    return Fraction(gas.statefl_per_participant * N, per_round)


@dataclass(frozen=True)
class CostLine:
    operation: str
    calls: int
    gas_per_call: int

    @property
    def gas(self) -> int:
        return self.calls * self.gas_per_call


def cost_breakdown(
    variant: str, N: int, T: int, B: int = 50, gas: GasTable | None = None, disputes: int = 1
) -> list[CostLine]:
    """Per-operation lines of a deployment: create, T commits, finalize,
    optional challenge/counter pairs (CC only) and ceil(N/B) distributions."""
    gas = gas or default_gas_table()
    if variant not in ("cc", "cp"):
        raise UnknownModel(variant)
    lines = [
        CostLine("create", 1, gas.create),
        CostLine("commit", T, gas.commit_cc if variant == "cc" else gas.commit_cp),
        CostLine("finalize", 1, gas.finalize),
    ]
    if variant == "cc" and disputes:
        lines.append(CostLine("challenge", disputes, gas.challenge_first))
        lines.append(CostLine("counter", disputes, gas.counter))
    lines.append(CostLine("distribute", -(-N // B), gas.distribute(B)))
    return lines


def total_money(lines: list[CostLine], pricing: Pricing | None = None) -> tuple[Fraction, Fraction]:
    pricing = pricing or Pricing()
    return pricing.gas_to_money(sum(l.gas for l in lines))
