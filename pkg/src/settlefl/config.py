"""Declarative TOML configuration for scenarios, sweeps and tools.

Sections: ``scenario``, ``ledger`` (with ``ledger.gas``), ``contract``,
``actors``, ``economics`` (with ``economics.game``), ``circuits`` and
``sweep``. Unknown keys are errors.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any

import tomli

from .chain import GAS_TABLES, GasTable, Pricing, WEI_PER_GWEI
from .economics import FrictionWeights, GameParameters
from .errors import ConfigInvalid
from .field import HashConfig
from .scenario import PARTICIPANT, THIRD_PARTY, ActorSpec, ScenarioConfig, default_actors

SCHEMA: dict[str, set[str]] = {
    "scenario": {
        "name", "seed", "N", "T", "B", "participants", "rounds", "variant", "mode",
        "reward_budget", "stake", "round_time", "initial_balance", "slash_unit",
    },
    "ledger": {
        "block_interval", "preset", "gas_price_gwei", "eth_usd", "charge_fees", "tx_gas_limit",
        "gas_table", "gas",
    },
    "contract": {"delta", "challenge_bond", "max_batch", "force_finalize_after"},
    "actors": {"aggregator", "activation_round", "passive", "third_party", "third_party_round"},
    "economics": {"w_g", "w_p", "w_c", "proof_time", "game"},
    "circuits": {"max_arity", "rounds", "sbox_exponent", "seed", "sizes", "batch"},
    "sweep": None,  # free-form: dotted key -> list of values
}
GAME_KEYS = {
    "R_model", "R_bonus", "C_commit", "P_slash_agg", "R_reward", "R_steal", "C_gas", "P_slash_i",
    "n_participants",
}
BLOCK_PRESETS = {"ethereum": 12, "fast": 1}


def frac(x) -> Fraction:
    if isinstance(x, bool):
        raise ConfigInvalid(f"expected a number, got {x!r}")
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    try:
        return Fraction(str(x))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigInvalid(f"not a rational number: {x!r}") from exc


def parse_text(text: str, source: str = "<config>") -> dict:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigInvalid(f"{source}: {exc}") from exc
    validate_keys(data)
    return data


def load_file(path: str | Path) -> dict:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config {p}: {exc.strerror}") from exc
    return parse_text(text, str(p))


def validate_keys(data: dict) -> None:
    for section, body in data.items():
        if section not in SCHEMA:
            raise ConfigInvalid(f"unknown section [{section}]")
        if not isinstance(body, dict):
            raise ConfigInvalid(f"[{section}] must be a table")
        allowed = SCHEMA[section]
        if allowed is None:
            continue
        extra = set(body) - allowed
        if extra:
            raise ConfigInvalid(f"unknown keys in [{section}]: {sorted(extra)}")
    game = data.get("economics", {}).get("game", {})
    extra = set(game) - GAME_KEYS
    if extra:
        raise ConfigInvalid(f"unknown keys in [economics.game]: {sorted(extra)}")
    gas = data.get("ledger", {}).get("gas", {})
    if not isinstance(gas, dict):
        raise ConfigInvalid("[ledger.gas] must be a table")


def parse_value(text: str) -> Any:
    try:
        return tomli.loads(f"v = {text}")["v"]
    except tomli.TOMLDecodeError:
        return text


def apply_override(data: dict, assignment: str) -> dict:
    """Apply a ``section.key=value`` override, returning a new dict."""
    if "=" not in assignment:
        raise ConfigInvalid(f"override must look like key=value, got {assignment!r}")
    key, _, raw = assignment.partition("=")
    parts = [k for k in key.strip().split(".") if k]
    if len(parts) < 2:
        raise ConfigInvalid(f"override key must be section.key, got {key!r}")
    out = copy.deepcopy(data)
    node = out
    for k in parts[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigInvalid(f"cannot override inside non-table {key!r}")
    node[parts[-1]] = parse_value(raw.strip())
    validate_keys(out)
    return out


def _int(d: dict, key: str, default):
    v = d.get(key, default)
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigInvalid(f"{key} must be an integer, got {v!r}")
    return v


def hash_config(data: dict) -> HashConfig:
    c = data.get("circuits", {})
    kw = {k: c[k] for k in ("max_arity", "rounds", "sbox_exponent", "seed") if k in c}
    return HashConfig(**kw)


def game_parameters(data: dict) -> GameParameters:
    g = dict(data.get("economics", {}).get("game", {}))
    base = GameParameters.example()
    kw = {k: frac(g.get(k, getattr(base, k))) for k in GAME_KEYS - {"n_participants"}}
    return GameParameters(**kw, n_participants=_int(g, "n_participants", 1))


def gas_table(data: dict) -> GasTable:
    led = data.get("ledger", {})
    name = led.get("gas_table", "default")
    if name not in GAS_TABLES:
        raise ConfigInvalid(f"unknown gas_table {name!r}; choose from {sorted(GAS_TABLES)}")
    return GasTable.from_dict(led.get("gas", {}), GAS_TABLES[name]())


def pricing(data: dict) -> Pricing:
    led = data.get("ledger", {})
    gwei = frac(led.get("gas_price_gwei", "0.075"))
    wei = gwei * WEI_PER_GWEI
    if wei.denominator != 1 or wei <= 0:
        raise ConfigInvalid("gas_price_gwei must be a positive whole number of wei")
    return Pricing(int(wei), frac(led.get("eth_usd", 1950)))


def scenario_config(data: dict, seed: int | None = None) -> ScenarioConfig:
    s = data.get("scenario", {})
    led = data.get("ledger", {})
    con = data.get("contract", {})
    act = data.get("actors", {})
    eco = data.get("economics", {})

    N = _int(s, "N", 8)
    participants = _int(s, "participants", None)
    n_eff = N if participants is None else participants
    activation = _int(act, "activation_round", 2)
    actors = list(default_actors(n_eff, act.get("aggregator", "honest"), activation))
    passive = act.get("passive", [])
    if not isinstance(passive, list):
        raise ConfigInvalid("actors.passive must be a list of participant names or indices")
    names = {a.name for a in actors if a.role == PARTICIPANT}
    for entry in passive:
        name = f"p{entry}" if isinstance(entry, int) else str(entry)
        if name not in names:
            raise ConfigInvalid(f"actors.passive names unknown participant {entry!r}")
        actors = [ActorSpec(a.name, a.role, "passive") if a.name == name else a for a in actors]
    third = act.get("third_party")
    if third:
        actors.append(ActorSpec("challenger", THIRD_PARTY, third, _int(act, "third_party_round", 2)))

    preset = led.get("preset")
    if preset is not None and preset not in BLOCK_PRESETS:
        raise ConfigInvalid(f"unknown ledger preset {preset!r}; choose from {sorted(BLOCK_PRESETS)}")
    block_interval = _int(led, "block_interval", BLOCK_PRESETS.get(preset, 12))

    try:
        return ScenarioConfig(
            name=str(s.get("name", "scenario")),
            N=N,
            T=_int(s, "T", 5),
            B=_int(s, "B", 4),
            participants=participants,
            rounds=_int(s, "rounds", None),
            variant=s.get("variant", "challenge"),
            mode=s.get("mode", "multi-shot"),
            delta=_int(con, "delta", 86_400),
            block_interval=block_interval,
            round_time=_int(s, "round_time", 60),
            gas=gas_table(data),
            pricing=pricing(data),
            charge_fees=bool(led.get("charge_fees", False)),
            tx_gas_limit=_int(led, "tx_gas_limit", 2**24),
            max_batch=_int(con, "max_batch", 70),
            seed=seed if seed is not None else _int(s, "seed", 0),
            reward_budget=_int(s, "reward_budget", 1_000_000),
            stake=_int(s, "stake", None),
            challenge_bond=_int(con, "challenge_bond", None),
            force_finalize_after=_int(con, "force_finalize_after", None),
            initial_balance=_int(s, "initial_balance", 10**18),
            slash_unit=_int(s, "slash_unit", 10**15),
            hash=hash_config(data),
            actors=tuple(actors),
            weights=FrictionWeights(
                frac(eco.get("w_g", 1)), frac(eco.get("w_p", 0)), frac(eco.get("w_c", 0))
            ),
            game=game_parameters(data),
            proof_time=frac(eco.get("proof_time", 5)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigInvalid):
            raise
        raise ConfigInvalid(str(exc)) from exc


@dataclass(frozen=True)
class SweepAxis:
    key: str
    values: tuple


def sweep_axes(data: dict) -> list[SweepAxis]:
    axes = []
    for key, values in sorted(data.get("sweep", {}).items()):
        if not isinstance(values, list) or not values:
            raise ConfigInvalid(f"sweep.{key} must be a non-empty list")
        if key.count(".") != 1:
            raise ConfigInvalid(f"sweep key {key!r} must be section.key")
        axes.append(SweepAxis(key, tuple(values)))
    return axes
