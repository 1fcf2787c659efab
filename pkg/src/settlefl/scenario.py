"""Scenario driver: actors, per-round workflow, threats and reports.

A scenario runs one task end to end on a fresh ledger: contract creation,
per-round commit and sync, finalize, optional disputes, then distribution.
Training itself is stubbed; rewards come from :func:`reward_generator`.
"""

from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

from . import circuits as cc
from .chain import GasTable, Ledger, Pricing, default_gas_table, hex_address
from .commitment import (
    HASH_MISMATCH,
    BroadcastChannel,
    Commitment,
    LocalView,
    ParticipantRoster,
    RewardMatrix,
    SyncMessage,
    address_for,
    commit_round,
    participant_check,
)
from .contract import ContractConfig, Mode, Tau, Variant, create
from .economics import Friction, FrictionWeights, GameParameters, check_nash, friction
from .errors import ConfigInvalid, UnknownBehavior, WitnessGenerationFailed
from .field import DEFAULT_HASH, HashConfig, keygen, pk_digest

SCHEMA_VERSION = "settlefl.report/1"

AGGREGATOR, PARTICIPANT, THIRD_PARTY = "aggregator", "participant", "third-party-challenger"
ROLES = (AGGREGATOR, PARTICIPANT, THIRD_PARTY)
BEHAVIORS = (
    "honest",
    "commitment-reversal",
    "refusal-to-commit",
    "reward-withholding",
    "stale-challenger",
    "malicious-challenger",
    "passive",
)
AGGREGATOR_BEHAVIORS = ("honest", "commitment-reversal", "refusal-to-commit", "reward-withholding")
CHALLENGER_BEHAVIORS = ("honest", "stale-challenger", "malicious-challenger", "passive")
THREATS = {
    "commitment-reversal": 1,
    "refusal-to-commit": 2,
    "reward-withholding": 3,
    "stale-challenger": 4,
}


@dataclass(frozen=True)
class ActorSpec:
    name: str
    role: str
    behavior: str = "honest"
    activation_round: int = 2

    def __post_init__(self):
        if self.role not in ROLES:
            raise ConfigInvalid(f"unknown role {self.role!r}")
        if self.behavior not in BEHAVIORS:
            raise UnknownBehavior(self.behavior)
        allowed = AGGREGATOR_BEHAVIORS if self.role == AGGREGATOR else CHALLENGER_BEHAVIORS
        if self.behavior not in allowed:
            raise UnknownBehavior(f"{self.behavior} is not a {self.role} behavior")

    @property
    def account(self) -> str:
        return hex_address(address_for(self.name))


def default_actors(n: int, aggregator: str = "honest", activation_round: int = 2) -> tuple[ActorSpec, ...]:
    return (ActorSpec("aggregator", AGGREGATOR, aggregator, activation_round),) + tuple(
        ActorSpec(f"p{i}", PARTICIPANT) for i in range(n)
    )


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "scenario"
    N: int = 8
    T: int = 5
    B: int = 4
    participants: int | None = None
    rounds: int | None = None
    variant: str = "challenge"
    mode: str = "multi-shot"
    delta: int = 86_400
    block_interval: int = 12
    round_time: int = 60
    gas: GasTable = field(default_factory=default_gas_table)
    pricing: Pricing = field(default_factory=Pricing)
    charge_fees: bool = False
    tx_gas_limit: int = 2**24
    max_batch: int = 70
    seed: int = 0
    reward_budget: int = 1_000_000
    stake: int | None = None
    challenge_bond: int | None = None
    force_finalize_after: int | None = None
    initial_balance: int = 10**18
    slash_unit: int = 10**15
    hash: HashConfig = DEFAULT_HASH
    actors: tuple[ActorSpec, ...] = ()
    weights: FrictionWeights = field(default_factory=FrictionWeights)
    game: GameParameters = field(default_factory=GameParameters.example)
    proof_time: Fraction = Fraction(5)

    def __post_init__(self):
        if not self.actors:
            object.__setattr__(self, "actors", default_actors(self.n_effective))
        self.validate()

    @property
    def n_effective(self) -> int:
        return self.N if self.participants is None else self.participants

    @property
    def n_rounds(self) -> int:
        return self.T - 1 if self.rounds is None else self.rounds

    @property
    def bond(self) -> int:
        if self.challenge_bond is not None:
            return self.challenge_bond
        return 10 * self.gas.challenge_first * self.pricing.gas_price_wei

    @property
    def total_stake(self) -> int:
        return self.stake if self.stake is not None else self.n_rounds * self.reward_budget

    def validate(self) -> None:
        if min(self.N, self.T, self.B) < 1:
            raise ConfigInvalid("N, T and B must be positive")
        if self.T < 2:
            raise ConfigInvalid("T must be at least 2 (column 0 is the genesis slot)")
        if not 1 <= self.n_effective <= self.N:
            raise ConfigInvalid(f"participants must be in [1, {self.N}]")
        if not 1 <= self.n_rounds <= self.T - 1:
            raise ConfigInvalid(f"rounds must be in [1, {self.T - 1}]")
        if self.variant not in ("challenge", "proof"):
            raise ConfigInvalid(f"unknown variant {self.variant!r}")
        if self.mode not in ("one-shot", "multi-shot"):
            raise ConfigInvalid(f"unknown mode {self.mode!r}")
        aggs = [a for a in self.actors if a.role == AGGREGATOR]
        if len(aggs) != 1:
            raise ConfigInvalid(f"exactly one aggregator required, got {len(aggs)}")
        parts = [a for a in self.actors if a.role == PARTICIPANT]
        if len(parts) != self.n_effective:
            raise ConfigInvalid(f"{len(parts)} participant actors for {self.n_effective} participants")
        names = [a.name for a in self.actors]
        if len(set(names)) != len(names):
            raise ConfigInvalid("actor names must be unique")
        agg = aggs[0]
        if agg.behavior != "honest" and not 1 <= agg.activation_round <= self.n_rounds:
            raise ConfigInvalid(f"activation round must be in [1, {self.n_rounds}]")
        if agg.behavior == "commitment-reversal" and agg.activation_round < 2:
            raise ConfigInvalid("commitment reversal needs an earlier round to rewrite (activation >= 2)")
        for a in self.actors:
            if a.behavior == "stale-challenger" and not 3 <= a.activation_round + 1 <= self.n_rounds + 1:
                raise ConfigInvalid("stale challenger needs 2 <= activation_round <= rounds")
        if self.reward_budget < 0 or self.total_stake <= 0:
            raise ConfigInvalid("reward budget must be non-negative and stake positive")

    @property
    def aggregator(self) -> ActorSpec:
        return next(a for a in self.actors if a.role == AGGREGATOR)

    @property
    def participant_actors(self) -> list[ActorSpec]:
        return [a for a in self.actors if a.role == PARTICIPANT]

    @property
    def third_parties(self) -> list[ActorSpec]:
        return [a for a in self.actors if a.role == THIRD_PARTY]

    def contract_config(self) -> ContractConfig:
        return ContractConfig(
            N=self.N,
            T=self.T,
            B=self.B,
            variant=self.variant,
            mode=self.mode,
            delta=self.delta,
            challenge_bond=self.bond,
            max_batch=self.max_batch,
            force_finalize_after=self.force_finalize_after,
            hash=self.hash,
        )


def reward_generator(seed: int, N: int, T: int, participants: int | None = None, rounds: int | None = None, budget: int = 1_000_000) -> list[RewardMatrix]:
    """Cumulative matrices V^0..V^rounds; round k fills column k only.

    Each column sums to at most ``budget``; padding rows stay zero.
    """
    n = N if participants is None else participants
    rounds = T - 1 if rounds is None else rounds
    rng = random.Random(f"settlefl/rewards/{seed}")
    share = budget // n
    out = [RewardMatrix.zeros(N, T)]
    for k in range(1, rounds + 1):
        column = [rng.randint(0, share) for _ in range(n)] + [0] * (N - n)
        out.append(out[-1].with_column(k, column))
    return out


@dataclass
class Held:
    """What a participant can prove about one commitment."""

    V: list[list[int]]
    C: int
    sig: object


@dataclass
class ScenarioReport:
    schema: str
    name: str
    seed: int
    variant: str
    mode: str
    terminal_state: str
    contract_state: dict
    balances: dict[str, int]
    balance_deltas: dict[str, int]
    payouts: dict[str, int]
    expected_payouts: dict[str, int]
    residual_escrow: int
    stake: int
    tx_summary: dict
    gas_by_function: dict[str, int]
    friction: dict
    equilibrium: dict
    outcome: dict
    violations: list[str]
    trace: list[str]
    events: list[dict]
    tx_log: list[dict]
    replay: dict = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "replay"}
        d["passed"] = self.passed
        return d


class _Run:
    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.params = cc.CircuitParams(cfg.N, cfg.T, cfg.contract_config().batch, cfg.hash)
        rng = random.Random(f"settlefl/scenario/{cfg.seed}")
        self.keypair = keygen(f"{cfg.name}/{cfg.seed}/{cfg.aggregator.name}", cfg.hash)
        self.rho = rng.getrandbits(248)
        self.agg = cfg.aggregator
        self.participants = cfg.participant_actors
        self.roster = ParticipantRoster.from_labels([a.name for a in self.participants], cfg.N)
        self.matrices = reward_generator(cfg.seed, cfg.N, cfg.T, cfg.n_effective, cfg.n_rounds, cfg.reward_budget)
        self.ledger = Ledger(cfg.block_interval, cfg.pricing, cfg.charge_fees, cfg.tx_gas_limit)
        self.channel = BroadcastChannel()
        self.trace: list[str] = []
        self.outcome: dict = {}
        self.violations: list[str] = []
        self.instances: list[dict] = []
        self.commitments: list[dict] = []
        self.held: dict[str, dict[int, Held]] = {}
        self.rejections: list[tuple[str, int, str]] = []
        self.chain_V: dict[int, list[list[int]]] = {}
        self.proofs_generated = 0
        self.finalize_time: int | None = None

    # -- helpers -----------------------------------------------------------
    def log(self, msg: str) -> None:
        self.trace.append(f"t={self.ledger.now} {msg}")

    def tx(self, actor: ActorSpec, function: str, *args, value: int = 0):
        receipt = self.ledger.submit_tx(actor.account, self.address, function, *args, value=value)
        status = "ok" if receipt.success else f"revert {receipt.revert_reason}"
        self.log(f"tx {actor.name}.{function} gas={receipt.gas_used} {status}")
        return receipt

    def record_instance(self, kind: str, inst: cc.SatisfiedInstance) -> None:
        self.proofs_generated += 1
        self.instances.append({"kind": kind, "instance": inst.to_json()})

    @property
    def contract(self):
        return self.ledger.contracts[self.address]

    def observers(self) -> list[ActorSpec]:
        return self.participants + self.cfg.third_parties

    # -- phases ------------------------------------------------------------
    def setup(self) -> None:
        cfg = self.cfg
        for a in self.cfg.actors:
            self.ledger.fund(a.account, cfg.initial_balance)
        self.ledger.fund(self.agg.account, cfg.total_stake)
        self.supply = self.ledger.total_supply()
        genesis = commit_round(self.matrices[0], self.roster, self.rho, self.keypair, 0, cfg.hash)
        self.address, receipt = create(
            self.ledger,
            self.agg.account,
            pk_digest(self.keypair.pk, cfg.hash),
            self.rho,
            genesis.C,
            self.roster.effective,
            cfg.contract_config(),
            cfg.gas,
            cfg.total_stake,
        )
        self.log(f"tx {self.agg.name}.create gas={receipt.gas_used} {'ok' if receipt.success else receipt.revert_reason}")
        self.commitments.append(genesis.to_record())
        self.chain_V[0] = self.matrices[0].copy_rows()
        for a in self.observers():
            self.held[a.name] = {0: Held(self.matrices[0].copy_rows(), genesis.C, genesis.sig)}

    def sync(self, k: int, V: list[list[int]], com: Commitment) -> None:
        msg = SyncMessage(k, tuple(tuple(r) for r in V), self.roster.P, com.C, com.sig)
        delivered = self.channel.deliver([a.name for a in self.observers()], msg)
        onchain = self.contract.commitment(k) if k < self.contract.r else None
        for a in self.observers():
            m = delivered.get(a.name)
            if m is None or a.behavior == "passive":
                continue
            if onchain is None:
                continue
            view = LocalView([list(r) for r in m.V], m.P, self.rho, self.keypair.pk)
            slot = self.roster.index_of(address_for(a.name)) if a.role == PARTICIPANT else None
            own = (k, self.matrices[k].V[slot][k]) if slot is not None else None
            res = participant_check(onchain, m.sig, view, own_slot=slot, own_reward=own, config=self.cfg.hash)
            if res.accepted:
                self.held[a.name][k] = Held(view.V, onchain, m.sig)
            else:
                self.rejections.append((a.name, k, res.reason))
                self.log(f"peer {a.name} rejects C^{k}: {res.reason}")

    def commit(self, k: int, V: list[list[int]], broadcast_V: list[list[int]] | None = None) -> bool:
        cfg = self.cfg
        com = commit_round(V, self.roster, self.rho, self.keypair, k, cfg.hash)
        proof = None
        if cfg.variant == "proof":
            try:
                proof = cc.prove_transition(
                    self.params, k, V, self.roster.P, self.roster.effective, self.rho, self.keypair,
                    expected=(self.contract.commitment(k - 1), com.C),
                )
                self.record_instance("transition", proof)
            except WitnessGenerationFailed as exc:
                self.log(f"aggregator cannot prove transition to C^{k}: {exc}")
                # submit an honest-looking proof for a different commitment
                honest_V = self.matrices[k].copy_rows()
                proof = cc.prove_transition(self.params, k, honest_V, self.roster.P, self.roster.effective, self.rho, self.keypair)
        receipt = self.tx(self.agg, "commit", com.C, proof)
        if not receipt.success:
            return False
        self.chain_V[k] = [list(r) for r in V]
        self.commitments.append(com.to_record())
        self.ledger.emit("peer", "sync", round=k)
        if broadcast_V is None:
            self.sync(k, V, com)
        else:
            self.sync(k, broadcast_V, commit_round(broadcast_V, self.roster, self.rho, self.keypair, k, cfg.hash))
        return True

    def distribute_all(self, actor: ActorSpec, r_dist: int, held: Held, use_key: bool) -> list:
        receipts = []
        cfg = self.cfg.contract_config()
        for b in range(cfg.num_batches):
            if use_key:
                inst = cc.prove_distribution(self.params, r_dist, b, held.V, self.roster.P, self.rho, self.keypair)
            else:
                inst = cc.prove_distribution(
                    self.params, r_dist, b, held.V, self.roster.P, self.rho,
                    pk=self.keypair.pk, signature=held.sig,
                )
            self.record_instance("distribution", inst)
            n = len(inst.public_inputs)
            half = (n - 4) // 2
            s_vec = list(inst.public_inputs[4 : 4 + half])
            p_vec = list(inst.public_inputs[4 + half :])
            receipts.append(self.tx(actor, "distribute", b, p_vec, s_vec, inst))
        return receipts

    def wait_unlock(self) -> None:
        dt = self.contract.t_unlock - self.ledger.now
        if dt > 0:
            self.ledger.advance_time(dt)
            self.log(f"wait {dt}s for dispute window")

    def challenge(self, actor: ActorSpec, r_prime: int):
        held = self.held[actor.name][r_prime - 2]
        inst = cc.prove_challenge(
            self.params, r_prime, held.V, self.roster.P, self.rho, pk=self.keypair.pk, signature=held.sig
        )
        self.record_instance("challenge", inst)
        return self.tx(actor, "challenge", r_prime, inst, value=self.cfg.bond)

    def try_counter(self, r_prime: int, candidates: Sequence[list[list[int]]]):
        expected = (self.contract.commitment(r_prime - 2), self.contract.commitment(r_prime - 1))
        errors = []
        for V in candidates:
            try:
                inst = cc.prove_transition(
                    self.params, r_prime - 1, V, self.roster.P, self.roster.effective, self.rho, self.keypair,
                    expected=expected,
                )
            except WitnessGenerationFailed as exc:
                errors.append(str(exc))
                continue
            self.record_instance("transition", inst)
            return self.tx(self.agg, "counter", r_prime, inst), errors
        self.log(f"aggregator has no counter witness for r'={r_prime}")
        return None, errors

    # -- main --------------------------------------------------------------
    def run(self) -> ScenarioReport:
        cfg = self.cfg
        self.setup()
        behavior = self.agg.behavior
        f = self.agg.activation_round
        last_committed = 0
        disqualified = False

        for k in range(1, cfg.n_rounds + 1):
            self.log(f"round {k}: broadcast model, local training, updates, aggregation")
            self.ledger.advance_time(cfg.round_time)
            V = self.matrices[k].copy_rows()
            if behavior == "refusal-to-commit" and k >= f:
                self.log(f"aggregator stops committing at round {k}")
                break
            if behavior == "commitment-reversal" and k == f:
                fraud = [list(r) for r in V]
                victim = 0
                moved = fraud[victim][1]
                fraud[victim][1] = 0
                fraud[1 % cfg.n_effective][1] += moved + 1
                ok = self.commit(k, fraud, broadcast_V=V)
                self.outcome["fraudulent_commit_accepted"] = ok
                if not ok:
                    self.log("fraudulent commitment rejected on chain; committing honestly")
                    self.commit(k, V)
                    last_committed = k
                    continue
                last_committed = k
                disqualified = self.dispute_reversal(k, fraud, V)
                if disqualified:
                    break
                continue
            if k > 1 and behavior == "commitment-reversal" and k > f and last_committed >= f:
                # uncaught fraud: later rounds build on the rewritten matrix
                V = [list(r) for r in self.chain_V[k - 1]]
                for i, row in enumerate(V):
                    row[k] = self.matrices[k].V[i][k]
            self.commit(k, V)
            last_committed = k

        self.outcome["last_committed_round"] = self.contract.r - 1
        if not disqualified:
            self.settle(behavior, last_committed)
        return self.report()

    def dispute_reversal(self, f: int, fraud, honest) -> bool:
        """Threat 1 resolution. Returns True when the aggregator is disqualified."""
        cfg = self.cfg
        mismatches = [r for r in self.rejections if r[1] == f and r[2] == HASH_MISMATCH]
        self.outcome["hash_mismatch_rejections"] = len(mismatches)
        if cfg.variant != "challenge":
            return False
        challengers = [a for a in self.observers() if a.behavior == "honest" and any(m[0] == a.name for m in mismatches)]
        if not challengers:
            self.outcome["challenged"] = False
            return False
        who = challengers[0]
        receipt = self.challenge(who, f + 1)
        self.outcome["challenge_accepted"] = receipt.success
        self.outcome["challenger"] = who.name
        counter, errors = self.try_counter(f + 1, [fraud, honest])
        self.outcome["counter_possible"] = counter is not None
        self.outcome["counter_errors"] = errors
        if counter is not None or not receipt.success:
            return False
        slash = cfg.game.P_slash_agg * cfg.slash_unit
        slash = int(slash)
        self.ledger.transfer(self.agg.account, who.account, slash)
        self.ledger.emit("scenario", "slashed", offender=self.agg.name, to=who.name, amount=slash)
        self.ledger.emit("scenario", "disqualified", offender=self.agg.name)
        self.outcome["disqualified"] = True
        self.outcome["slash_amount"] = slash
        self.outcome["participants_can_distribute_latest"] = False
        self.log(f"aggregator disqualified, {slash} wei slashed to {who.name}; participants exit")
        self.ledger.advance_time(cfg.delta)
        return True

    def settle(self, behavior: str, last_committed: int) -> None:
        cfg = self.cfg
        participants = [a for a in self.participants if a.behavior == "honest"] or self.participants
        if behavior == "refusal-to-commit":
            if cfg.force_finalize_after is None:
                self.log("aggregator silent and no public finalize: task stalls")
                self.outcome["stalled"] = True
                return
            self.ledger.advance_time(cfg.force_finalize_after)
            exit_actor = participants[0]
            rc = self.tx(exit_actor, "force_finalize")
            self.outcome["force_finalize"] = rc.success
            self.outcome["exit_round"] = last_committed
            self.finalize_time = self.ledger.now
            self.wait_unlock()
            held = self.held[exit_actor.name][last_committed]
            self.distribute_all(exit_actor, last_committed, held, use_key=False)
            return

        rc = self.tx(self.agg, "finalize")
        self.finalize_time = self.ledger.now
        for stale in [a for a in self.cfg.actors if a.behavior == "stale-challenger"]:
            self.stale_dispute(stale)
        for mal in [a for a in self.cfg.actors if a.behavior == "malicious-challenger"]:
            self.malicious_dispute(mal)
        self.wait_unlock()
        r_dist = self.contract.r - 1
        if behavior == "reward-withholding":
            self.log("aggregator withholds distribution")
            actor = participants[0]
            held = self.held[actor.name].get(r_dist)
            if held is None:
                self.outcome["withholding_recovered"] = False
                return
            receipts = self.distribute_all(actor, r_dist, held, use_key=False)
            self.outcome["third_party_distribute"] = all(r.success for r in receipts)
            self.outcome["distributor"] = actor.name
            return
        held = Held(self.chain_V[r_dist], self.contract.commitment(r_dist), None)
        self.distribute_all(self.agg, r_dist, held, use_key=True)

    def stale_dispute(self, actor: ActorSpec) -> None:
        r_prime = actor.activation_round + 1
        bal_agg = self.ledger.balance(self.agg.account)
        bal_chal = self.ledger.balance(actor.account)
        rc = self.challenge(actor, r_prime)
        self.outcome["stale_challenge_accepted"] = rc.success
        counter, _ = self.try_counter(r_prime, [self.chain_V[r_prime - 1]])
        self.outcome["counter_success"] = bool(counter and counter.success)
        self.outcome["state_after_counter"] = self.contract.tau.value
        self.outcome["bond"] = self.cfg.bond
        self.outcome["aggregator_gain"] = self.ledger.balance(self.agg.account) - bal_agg
        self.outcome["challenger_loss"] = bal_chal - self.ledger.balance(actor.account)
        repeat = self.challenge(actor, r_prime)
        self.outcome["repeat_challenge"] = "ok" if repeat.success else repeat.revert_reason

    def malicious_dispute(self, actor: ActorSpec) -> None:
        r_prime = max(actor.activation_round + 1, self.contract.r_last + 1)
        forged_key = keygen(f"forged/{actor.name}", self.cfg.hash)
        V = [[0] * self.cfg.T for _ in range(self.cfg.N)]
        inst = cc.prove_challenge(self.params, r_prime, V, self.roster.P, self.rho, forged_key)
        self.record_instance("challenge", inst)
        rc = self.tx(actor, "challenge", r_prime, inst, value=self.cfg.bond)
        self.outcome["malicious_challenge"] = "ok" if rc.success else rc.revert_reason

    # -- reporting ---------------------------------------------------------
    def report(self) -> ScenarioReport:
        cfg = self.cfg
        led = self.ledger
        contract = self.contract
        final_r = contract.r - 1
        payouts = {a.name: contract.paid.get(a.account, 0) for a in self.participants}
        final_V = self.chain_V.get(final_r, self.matrices[0].copy_rows())
        expected = {}
        for a in self.participants:
            slot = self.roster.index_of(address_for(a.name))
            expected[a.name] = sum(final_V[slot])
        balances = {a.name: led.balance(a.account) for a in cfg.actors}
        start = {a.name: cfg.initial_balance + (cfg.total_stake if a.role == AGGREGATOR else 0) for a in cfg.actors}
        senders = {r.sender for r in led.tx_log}
        part_accounts = {a.account for a in self.participants}
        tx_summary = {
            "count": len(led.tx_log),
            "reverted": sum(1 for r in led.tx_log if not r.success),
            "by_function": _count(r.function for r in led.tx_log),
            "participant_txs": sum(1 for r in led.tx_log if r.sender in part_accounts),
            "challenge_txs": sum(1 for r in led.tx_log if r.function == "challenge"),
        }
        t_p = 0
        if self.finalize_time is not None and contract.tau in (Tau.DISTRIBUTED, Tau.DISTRIBUTING):
            t_p = max(0, contract.t_unlock - self.finalize_time)
        t_c = self.proof_count("transition") * cfg.proof_time if cfg.variant == "proof" else Fraction(0)
        total_gas = sum(r.gas_used for r in led.tx_log)
        pi = Friction(Fraction(total_gas), Fraction(t_p), t_c)
        nash = check_nash(cfg.game)
        rep = ScenarioReport(
            schema=SCHEMA_VERSION,
            name=cfg.name,
            seed=cfg.seed,
            variant=cfg.variant,
            mode=cfg.mode,
            terminal_state=contract.tau.value,
            contract_state=contract.state(),
            balances=balances,
            balance_deltas={k: balances[k] - start[k] for k in balances},
            payouts=payouts,
            expected_payouts=expected,
            residual_escrow=led.balance(self.address),
            stake=cfg.total_stake,
            tx_summary=tx_summary,
            gas_by_function=led.gas_by_function(),
            friction={
                "C_g": total_gas,
                "T_p": t_p,
                "T_c": str(t_c),
                "value": str(friction(pi, cfg.weights)),
                "weights": [str(cfg.weights.w_g), str(cfg.weights.w_p), str(cfg.weights.w_c)],
            },
            equilibrium=nash.to_dict(),
            outcome=_jsonable(self.outcome),
            violations=[],
            trace=self.trace,
            events=[{"t": e.timestamp, "source": e.source, "name": e.name, **_jsonable(e.params)} for e in led.event_log],
            tx_log=[r.row() for r in led.tx_log],
            replay={"commitments": self.commitments, "instances": self.instances, "tx_csv": led.tx_csv()},
        )
        rep.violations = check_expectations(cfg, rep, self)
        return rep

    def proof_count(self, kind: str) -> int:
        return sum(1 for i in self.instances if i["kind"] == kind)


def _count(items) -> dict[str, int]:
    out: dict[str, int] = {}
    for x in items:
        out[x] = out.get(x, 0) + 1
    return dict(sorted(out.items()))


def _jsonable(d):
    if isinstance(d, dict):
        return {k: _jsonable(v) for k, v in d.items()}
    if isinstance(d, (list, tuple)):
        return [_jsonable(v) for v in d]
    if isinstance(d, Fraction):
        return str(d)
    return d


def threat_of(cfg: ScenarioConfig) -> str | None:
    if cfg.aggregator.behavior != "honest":
        return cfg.aggregator.behavior
    for a in cfg.actors:
        if a.behavior == "stale-challenger":
            return "stale-challenger"
    return None


def check_expectations(cfg: ScenarioConfig, rep: ScenarioReport, run: _Run) -> list[str]:
    """Expected-outcome assertions for the scenario's behaviors."""
    v: list[str] = []
    o = rep.outcome

    def need(cond: bool, msg: str):
        if not cond:
            v.append(msg)

    led = run.ledger
    need(led.total_supply() == run.supply, "ledger supply not conserved")
    threat = threat_of(cfg)
    paid_total = sum(rep.payouts.values())
    if rep.terminal_state == Tau.DISTRIBUTED.value:
        need(paid_total + rep.residual_escrow == rep.stake, "payouts plus residual escrow differ from stake")
        need(rep.payouts == rep.expected_payouts, "payouts differ from committed row sums")

    if threat is None:
        need(rep.terminal_state == Tau.DISTRIBUTED.value, f"terminal state {rep.terminal_state}, expected Distributed")
        if all(a.behavior in ("honest", "passive") for a in cfg.actors):
            need(rep.tx_summary["participant_txs"] == 0, "honest participants sent transactions")
            need(rep.tx_summary["challenge_txs"] == 0, "challenge transactions in an honest run")
        if cfg.variant == "proof":
            need(rep.friction["T_p"] == 0, "validity variant waited on a dispute window")
        if any(a.behavior == "malicious-challenger" for a in cfg.actors):
            need(o.get("malicious_challenge") == "InvalidProof", "forged challenge was not rejected")
    elif threat == "commitment-reversal":
        if cfg.variant == "challenge":
            need(o.get("hash_mismatch_rejections", 0) > 0, "no participant rejected with hash-mismatch")
            need(o.get("challenge_accepted") is True, "challenge against the reversal not accepted")
            need(o.get("counter_possible") is False, "aggregator produced a counter witness")
            need(o.get("disqualified") is True, "aggregator not disqualified")
            need(any(e["name"] == "slashed" for e in rep.events), "no slash event recorded")
            need(rep.terminal_state == Tau.CHALLENGED.value, "contract did not stay Challenged")
        else:
            need(o.get("fraudulent_commit_accepted") is False, "validity variant accepted a fraudulent commit")
    elif threat == "refusal-to-commit":
        f = cfg.aggregator.activation_round
        need(o.get("last_committed_round") == f - 1, "aggregator committed past its refusal round")
        need(o.get("force_finalize") is True, "participants could not force finalize")
        need(rep.terminal_state == Tau.DISTRIBUTED.value, "rounds before the refusal were not settled")
        honest_final = run.matrices[f]
        for a in run.participants:
            slot = run.roster.index_of(address_for(a.name))
            lost = sum(honest_final.V[slot]) - rep.payouts[a.name]
            need(lost == honest_final.V[slot][f], f"{a.name} lost more than the refused round")
    elif threat == "reward-withholding":
        need(o.get("third_party_distribute") is True, "participant-triggered distribution failed")
        agg_account = cfg.aggregator.account
        need(
            not any(r["function"] == "distribute" and r["sender"] == agg_account for r in rep.tx_log),
            "aggregator distributed despite withholding",
        )
        need(rep.terminal_state == Tau.DISTRIBUTED.value, "withheld rewards not distributed")
    elif threat == "stale-challenger":
        need(o.get("stale_challenge_accepted") is True, "stale challenge was not accepted")
        need(o.get("counter_success") is True, "aggregator counter failed")
        need(o.get("state_after_counter") == Tau.REWARD_INIT.value, "counter did not restore RewardInit")
        need(o.get("aggregator_gain") == cfg.bond and o.get("challenger_loss") == cfg.bond, "bond not moved to aggregator")
        need(o.get("repeat_challenge") == "StaleRound", "repeat challenge not rejected as stale")
        need(rep.terminal_state == Tau.DISTRIBUTED.value, "task did not complete after the counter")
    return v


def run_scenario(cfg: ScenarioConfig) -> ScenarioReport:
    return _Run(cfg).run()


def run_many(configs: Sequence[ScenarioConfig], parallel: int = 1) -> list[ScenarioReport]:
    if parallel <= 1 or len(configs) <= 1:
        return [run_scenario(c) for c in configs]
    with ProcessPoolExecutor(max_workers=parallel) as pool:
        return list(pool.map(run_scenario, configs))


def threat_config(threat: str, base: ScenarioConfig | None = None, activation_round: int = 2) -> ScenarioConfig:
    """A canonical scenario exercising one of the four threats."""
    if threat not in THREATS:
        raise UnknownBehavior(threat)
    base = base or ScenarioConfig()
    n = base.n_effective
    if threat == "stale-challenger":
        actors = default_actors(n) + (ActorSpec("challenger", THIRD_PARTY, "stale-challenger", activation_round),)
    else:
        actors = default_actors(n, threat, activation_round)
    extra = {}
    if threat == "refusal-to-commit":
        extra["force_finalize_after"] = base.force_finalize_after or 7 * 86_400
    return replace(base, name=f"threat-{THREATS[threat]}-{threat}", actors=actors, variant="challenge", **extra)
