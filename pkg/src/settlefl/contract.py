"""Settlement contract: the on-chain state machine for both variants.

Public entry points are ``tx_*`` methods invoked through
:meth:`Ledger.submit_tx`. Every failed assertion raises :class:`Revert`
with a short reason code.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum

from . import circuits as cc
from .chain import BURN, MAX_BATCH, CallContext, GasTable, TxReceipt, hex_address
from .errors import Revert, ShapeMismatch
from .field import DEFAULT_HASH, HashConfig


class Tau(str, Enum):
    COMMITTED = "Committed"
    REWARD_INIT = "RewardInit"
    CHALLENGED = "Challenged"
    DISTRIBUTING = "Distributing"
    DISTRIBUTED = "Distributed"


class Variant(str, Enum):
    CHALLENGE = "challenge"
    PROOF = "proof"


class Mode(str, Enum):
    ONE_SHOT = "one-shot"
    MULTI_SHOT = "multi-shot"


FUNCTIONS = ("commit", "finalize", "challenge", "counter", "distribute", "force_finalize")


@dataclass(frozen=True)
class ContractConfig:
    N: int
    T: int
    B: int
    variant: Variant = Variant.CHALLENGE
    mode: Mode = Mode.MULTI_SHOT
    delta: int = 86_400
    challenge_bond: int = 0
    max_batch: int = MAX_BATCH
    # None disables the public timeout finalize
    force_finalize_after: int | None = None
    hash: HashConfig = DEFAULT_HASH

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.delta < 0 or self.challenge_bond < 0:
            raise ValueError("delta and challenge_bond must be non-negative")

    @property
    def batch(self) -> int:
        """Payee slots per distribute call: B, or the whole roster in one-shot mode."""
        return self.N if self.mode is Mode.ONE_SHOT else self.B

    @property
    def circuit_params(self) -> cc.CircuitParams:
        return cc.CircuitParams(self.N, self.T, self.batch, self.hash)

    @property
    def num_batches(self) -> int:
        return -(-self.N // self.batch)


def salt_digest(rho: int) -> str:
    """On-chain stand-in for the salt: the contract never needs rho itself."""
    return hashlib.sha256(f"settlefl/salt/{rho}".encode()).hexdigest()


class SettlementContract:
    def __init__(
        self,
        address: str,
        owner: str,
        h_a: int,
        rho_ref: str,
        genesis: int,
        participants: int,
        config: ContractConfig,
        gas: GasTable,
        now: int,
    ):
        self.address = address
        self.owner = owner
        self.h_a = h_a
        self.rho_ref = rho_ref
        self.genesis = genesis
        self.participants = participants
        self.config = config
        self.gas = gas
        self.history: list[int] = []
        self.r_last = 2
        self.tau = Tau.COMMITTED
        self.t_unlock = 0
        self.xi = 0
        self.paid_batches: list[int] = []
        self.pending_bonds: list[tuple[str, int]] = []
        self.challenges: list[int] = []
        self.last_activity = now
        self.paid: dict[str, int] = {}

    # -- views -------------------------------------------------------------
    @property
    def r(self) -> int:
        return len(self.history) + 1

    def commitment(self, j: int) -> int:
        """C^j: the genesis commitment for j = 0, else the j-th committed value."""
        if j == 0:
            return self.genesis
        if 1 <= j <= len(self.history):
            return self.history[j - 1]
        raise Revert("InvalidProof", f"no commitment C^{j}")

    def state(self) -> dict:
        return {
            "r": self.r,
            "r_last": self.r_last,
            "tau": self.tau.value,
            "t_unlock": self.t_unlock,
            "xi": self.xi,
            "history": [str(c) for c in self.history],
            "paid_batches": sorted(self.paid_batches),
        }

    # -- gas ---------------------------------------------------------------
    def gas_cost(self, function: str, args, attempt: int) -> int:
        g = self.gas
        if function == "commit":
            return g.commit_cp if self.config.variant is Variant.PROOF else g.commit_cc
        if function == "challenge":
            return g.challenge_first if attempt == 0 else g.challenge_repeat
        if function == "distribute":
            payees = len(args[1]) if len(args) > 1 else self.config.batch
            return g.distribute(max(payees, 1))
        return getattr(g, function, g.revert_floor)

    # -- helpers -----------------------------------------------------------
    def _only_owner(self, ctx: CallContext) -> None:
        if ctx.sender != self.owner:
            raise Revert("NotOwner", ctx.sender)

    def _require(self, allowed, ctx_name: str) -> None:
        # Challenged does not exist in the proof variant; refuse to act from it
        if self.tau not in allowed or (self.tau is Tau.CHALLENGED and self.config.variant is Variant.PROOF):
            raise Revert("WrongState", f"{ctx_name} in {self.tau.value}")

    def _verify(self, circuit_id: str, proof, publics: dict) -> None:
        if proof is None:
            raise Revert("InvalidProof", "missing proof")
        circuit = cc.build(circuit_id, self.config.circuit_params)
        try:
            ok = cc.verify_instance(circuit, proof, publics)
        except ShapeMismatch as exc:
            raise Revert("InvalidProof", str(exc)) from exc
        if not ok:
            raise Revert("InvalidProof", f"{circuit_id} proof rejected")

    def _unlock_after(self, ctx: CallContext) -> int:
        delay = 0 if self.config.variant is Variant.PROOF else self.config.delta
        return ctx.now + delay

    # -- functions ---------------------------------------------------------
    def tx_commit(self, ctx: CallContext, C_new: int, proof=None) -> None:
        self._only_owner(ctx)
        self._require({Tau.COMMITTED}, "commit")
        if self.r >= self.config.T:
            raise Revert("RoundLimit", f"all {self.config.T - 1} rounds committed")
        if self.config.variant is Variant.PROOF:
            r = self.r
            self._verify(
                cc.TRANSITION,
                proof,
                {"r": r, "C1": self.commitment(r - 1), "C2": C_new, "h_A": self.h_a},
            )
        self.history.append(C_new)
        self.last_activity = ctx.now
        ctx.ledger.emit(self.address, "committed", r=self.r, C=str(C_new))

    def tx_finalize(self, ctx: CallContext) -> None:
        self._only_owner(ctx)
        self._require({Tau.COMMITTED, Tau.CHALLENGED}, "finalize")
        self.tau = Tau.REWARD_INIT
        self.t_unlock = self._unlock_after(ctx)
        ctx.ledger.emit(self.address, "finalized", t_unlock=self.t_unlock)

    def tx_force_finalize(self, ctx: CallContext) -> None:
        """Public timeout finalize for an owner who stopped committing."""
        timeout = self.config.force_finalize_after
        if timeout is None:
            raise Revert("Disabled", "force_finalize not enabled")
        self._require({Tau.COMMITTED}, "force_finalize")
        if ctx.now < self.last_activity + timeout:
            raise Revert("WindowNotElapsed", f"owner active until {self.last_activity + timeout}")
        self.tau = Tau.REWARD_INIT
        self.t_unlock = ctx.now
        ctx.ledger.emit(self.address, "force_finalized", by=ctx.sender)

    def tx_challenge(self, ctx: CallContext, r_prime: int, proof=None) -> None:
        if self.config.variant is not Variant.CHALLENGE:
            raise Revert("WrongVariant", "challenge")
        self._require({Tau.COMMITTED, Tau.REWARD_INIT, Tau.CHALLENGED}, "challenge")
        if r_prime <= self.r_last:
            raise Revert("StaleRound", f"r'={r_prime} <= r_last={self.r_last}")
        self._verify(
            cc.CHALLENGE, proof, {"r": r_prime, "C": self.commitment(r_prime - 2), "h_A": self.h_a}
        )
        if ctx.value < self.config.challenge_bond:
            raise Revert("InsufficientBond", f"{ctx.value} < {self.config.challenge_bond}")
        self.r_last = r_prime
        self.tau = Tau.CHALLENGED
        self.t_unlock = ctx.now + self.config.delta
        self.challenges.append(r_prime)
        if ctx.value:
            self.pending_bonds.append((ctx.sender, ctx.value))
        ctx.ledger.emit(self.address, "challenged", r=r_prime, by=ctx.sender, bond=ctx.value)

    def tx_counter(self, ctx: CallContext, r_prime: int, proof=None) -> None:
        if self.config.variant is not Variant.CHALLENGE:
            raise Revert("WrongVariant", "counter")
        self._require({Tau.CHALLENGED}, "counter")
        if r_prime < 3:
            raise Revert("RoundTooEarly", f"r'={r_prime}")
        self._verify(
            cc.TRANSITION,
            proof,
            {
                "r": r_prime - 1,
                "C1": self.commitment(r_prime - 2),
                "C2": self.commitment(r_prime - 1),
                "h_A": self.h_a,
            },
        )
        self.tau = Tau.REWARD_INIT
        self.t_unlock = ctx.now + self.config.delta
        forfeited = 0
        for challenger, bond in self.pending_bonds:
            ctx.ledger.transfer(self.address, self.owner, bond)
            forfeited += bond
        self.pending_bonds = []
        ctx.ledger.emit(self.address, "countered", r=r_prime, forfeited=forfeited)

    def tx_distribute(self, ctx: CallContext, b: int, p_vec, s_vec, proof=None) -> None:
        cfg = self.config
        self._require({Tau.REWARD_INIT, Tau.CHALLENGED, Tau.DISTRIBUTING}, "distribute")
        if ctx.now < self.t_unlock:
            raise Revert("WindowNotElapsed", f"now={ctx.now} < t_unlock={self.t_unlock}")
        if len(p_vec) > cfg.max_batch:
            raise Revert("DeployLimit", f"{len(p_vec)} payees exceed {cfg.max_batch}")
        if len(p_vec) != cfg.batch or len(s_vec) != cfg.batch:
            raise Revert("ShapeMismatch", f"expected {cfg.batch} payees")
        if not 0 <= b < cfg.num_batches:
            raise Revert("BatchIndexOutOfRange", f"b={b}")
        if b in self.paid_batches:
            raise Revert("DoubleBatch", f"batch {b} already paid")
        r = self.r
        self._verify(
            cc.DISTRIBUTION,
            proof,
            {
                "r": r - 1,
                "b": b,
                "C": self.commitment(r - 1),
                "h_A": self.h_a,
                "s_p": list(s_vec),
                "p_p": list(p_vec),
            },
        )
        if self.tau is Tau.CHALLENGED:
            # nobody answered the challenge: bonds go back to the challengers
            for challenger, bond in self.pending_bonds:
                ctx.ledger.transfer(self.address, challenger, bond)
            self.pending_bonds = []
        for p, s in zip(p_vec, s_vec):
            if p and s:
                to = hex_address(p)
                try:
                    ctx.ledger.transfer(self.address, to, s)
                except Exception as exc:
                    raise Revert("InsufficientEscrow", str(exc)) from exc
                self.paid[to] = self.paid.get(to, 0) + s
        self.paid_batches.append(b)
        if cfg.mode is Mode.MULTI_SHOT:
            self.xi += cfg.batch
            self.tau = Tau.DISTRIBUTED if self.xi >= self.participants else Tau.DISTRIBUTING
        else:
            self.tau = Tau.DISTRIBUTED
        ctx.ledger.emit(self.address, "distributed", b=b, total=sum(s_vec), by=ctx.sender)


def create(
    ledger,
    sender: str,
    h_a: int,
    rho: int,
    genesis: int,
    participants: int,
    config: ContractConfig,
    gas: GasTable,
    stake: int,
    address: str | None = None,
) -> tuple[str, object]:
    """Deploy a contract funded with ``stake``; returns (address, receipt)."""
    address = address or f"0xcontract{len(ledger.contracts):02d}"
    receipt_fields = dict(sender=sender, to=address, function="create")
    ledger.now += ledger.block_interval
    gas_used = gas.create
    ok, reason = True, ""
    if stake <= 0:
        ok, reason = False, "ZeroStake"
    fee = gas_used * ledger.pricing.gas_price_wei if ledger.charge_fees else 0
    if ok:
        contract = SettlementContract(
            address, sender, h_a, salt_digest(rho), genesis, participants, config, gas, ledger.now
        )
        ledger.deploy(address, contract)
        ledger.transfer(sender, address, stake)
        ledger.emit(address, "created", owner=sender, stake=stake, variant=config.variant.value)
    if fee:
        ledger.transfer(sender, BURN, fee)
    receipt = TxReceipt(
        len(ledger.tx_log), ledger.now, gas_used=gas_used, success=ok, revert_reason=reason,
        value=stake if ok else 0, **receipt_fields,
    )
    ledger.tx_log.append(receipt)
    return address, receipt
