"""Deterministic simulated ledger with table-driven gas metering."""

from __future__ import annotations

import copy
import csv
import io
import json
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from typing import Any

from .errors import ConfigInvalid, InsufficientBalance, Revert

WEI_PER_GWEI = 10**9
WEI_PER_ETH = 10**18
BURN = "0xburn"
TX_GAS_LIMIT = 2**24
MAX_BATCH = 70


@dataclass(frozen=True)
class GasTable:
    create: int = 160_000
    commit_cc: int = 63_000
    commit_cp: int = 281_000
    finalize: int = 66_667
    challenge_first: int = 27_500
    challenge_repeat: int = 25_700
    counter: int = 26_000
    distribute_per_batch: int = 1_466_667
    # distribute_per_batch is measured at this many payees per call
    reference_batch: int = 50
    force_finalize: int = 66_667
    revert_floor: int = 21_000
    statefl_per_participant: int = 456_000
    bcfl_per_participant_round: int = 45_000

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) <= 0:
                raise ConfigInvalid(f"gas entry {f.name} must be positive")

    def distribute(self, payees: int) -> int:
        """Linear in the number of payee slots, anchored at the reference batch."""
        return -(-self.distribute_per_batch * payees // self.reference_batch)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict, base: "GasTable | None" = None) -> "GasTable":
        base = base or cls()
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigInvalid(f"unknown gas table keys: {sorted(extra)}")
        return cls(**{**asdict(base), **{k: int(v) for k, v in d.items()}})


def default_gas_table() -> GasTable:
    return GasTable()


def sepolia_gas_table() -> GasTable:
    """Per-call figures obtained by inverting the reference mETH costs at 0.075 gwei."""
    return GasTable(
        commit_cc=66_667,
        commit_cp=280_000,
        challenge_first=280_000,
        challenge_repeat=280_000,
        counter=266_667,
    )


GAS_TABLES = {"default": default_gas_table, "sepolia": sepolia_gas_table}


@dataclass(frozen=True)
class Pricing:
    gas_price_wei: int = 75_000_000  # 0.075 gwei
    eth_usd: Fraction = Fraction(1950)

    def gas_to_money(self, gas: int) -> tuple[Fraction, Fraction]:
        eth = Fraction(gas * self.gas_price_wei, WEI_PER_ETH)
        return eth * 1000, eth * self.eth_usd


def gas_to_money(gas: int, pricing: Pricing | None = None) -> tuple[float, float]:
    """(mETH, USD) for a gas amount."""
    m, usd = (pricing or Pricing()).gas_to_money(gas)
    return float(m), float(usd)


@dataclass(frozen=True)
class TxReceipt:
    index: int
    timestamp: int
    sender: str
    to: str
    function: str
    gas_used: int
    success: bool
    revert_reason: str = ""
    value: int = 0

    def row(self) -> dict:
        return asdict(self)


@dataclass
class Event:
    timestamp: int
    source: str
    name: str
    params: dict


@dataclass
class CallContext:
    sender: str
    value: int
    now: int
    ledger: "Ledger"


class Ledger:
    """Single serialized executor: one transaction per block."""

    def __init__(
        self,
        block_interval: int = 12,
        pricing: Pricing | None = None,
        charge_fees: bool = False,
        tx_gas_limit: int = TX_GAS_LIMIT,
        genesis_time: int = 0,
    ):
        if block_interval < 0:
            raise ConfigInvalid("block_interval must be non-negative")
        self.now = genesis_time
        self.block_interval = block_interval
        self.pricing = pricing or Pricing()
        self.charge_fees = charge_fees
        self.tx_gas_limit = tx_gas_limit
        self.balances: dict[str, int] = {BURN: 0}
        self.contracts: dict[str, Any] = {}
        self.tx_log: list[TxReceipt] = []
        self.event_log: list[Event] = []
        self.call_counts: dict[tuple[str, str], int] = {}

    # -- accounts ----------------------------------------------------------
    def fund(self, account: str, amount: int) -> None:
        if amount < 0:
            raise ValueError("negative funding")
        self.balances[account] = self.balances.get(account, 0) + amount

    def balance(self, account: str) -> int:
        return self.balances.get(account, 0)

    def transfer(self, src: str, dst: str, amount: int) -> None:
        if amount < 0:
            raise ValueError("negative transfer")
        if self.balances.get(src, 0) < amount:
            raise InsufficientBalance(f"{src} holds {self.balance(src)}, needs {amount}")
        self.balances[src] -= amount
        self.balances[dst] = self.balances.get(dst, 0) + amount

    def total_supply(self) -> int:
        return sum(self.balances.values())

    def emit(self, source: str, name: str, **params) -> None:
        self.event_log.append(Event(self.now, source, name, params))

    # -- time --------------------------------------------------------------
    def advance_time(self, dt: int) -> None:
        if dt < 0:
            raise ValueError("time cannot go backwards")
        self.now += dt

    # -- transactions ------------------------------------------------------
    def deploy(self, address: str, contract) -> None:
        if address in self.contracts:
            raise ValueError(f"address {address} already in use")
        self.contracts[address] = contract
        self.balances.setdefault(address, 0)

    def submit_tx(self, sender: str, to: str, function: str, *args, value: int = 0) -> TxReceipt:
        """Execute ``to.function(ctx, *args)`` atomically in a fresh block.

        Reverts roll back state but still pay gas. When fee charging is on the
        fee goes to the burn account.
        """
        self.now += self.block_interval
        contract = self.contracts.get(to)
        attempt = self.call_counts.get((to, function), 0)
        self.call_counts[(to, function)] = attempt + 1
        gas = self._gas_for(contract, function, args, attempt)
        fee = gas * self.pricing.gas_price_wei if self.charge_fees else 0
        if self.balance(sender) < fee + value:
            raise InsufficientBalance(f"{sender} cannot cover fee {fee} plus value {value}")

        snapshot = (copy.deepcopy(self.balances), copy.deepcopy(contract.__dict__) if contract else None, len(self.event_log))
        ok, reason = True, ""
        try:
            if contract is None:
                raise Revert("NoContract", to)
            fn = getattr(contract, "tx_" + function, None)
            if fn is None:
                raise Revert("UnknownFunction", function)
            if gas > self.tx_gas_limit:
                raise Revert("GasLimit", f"{gas} exceeds {self.tx_gas_limit}")
            if value:
                self.transfer(sender, to, value)
            fn(CallContext(sender, value, self.now, self), *args)
        except (Revert, InsufficientBalance) as exc:
            ok, reason = False, getattr(exc, "reason", "InsufficientBalance")
            self.balances = snapshot[0]
            if contract is not None:
                contract.__dict__.clear()
                contract.__dict__.update(snapshot[1])
            del self.event_log[snapshot[2]:]
        if fee:
            self.transfer(sender, BURN, fee)
        receipt = TxReceipt(len(self.tx_log), self.now, sender, to, function, gas, ok, reason, value)
        self.tx_log.append(receipt)
        return receipt

    def _gas_for(self, contract, function: str, args, attempt: int) -> int:
        if contract is None or not hasattr(contract, "gas_cost"):
            return GasTable().revert_floor
        return contract.gas_cost(function, args, attempt)

    # -- export ------------------------------------------------------------
    def tx_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["timestamp", "sender", "function", "gas", "success", "revert_reason"])
        for r in self.tx_log:
            w.writerow([r.timestamp, r.sender, r.function, r.gas_used, int(r.success), r.revert_reason])
        return buf.getvalue()

    def tx_json(self) -> str:
        return json.dumps([r.row() for r in self.tx_log], sort_keys=True)

    def gas_by_function(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for r in self.tx_log:
            out[r.function] = out.get(r.function, 0) + r.gas_used
        return dict(sorted(out.items()))


def hex_address(addr: int) -> str:
    return f"0x{addr:040x}"
