"""Off-chain commitment lifecycle: build, sign, broadcast and check."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .errors import MaskViolation
from .field import DEFAULT_HASH, HashConfig, KeyPair, Signature, sign, verify_sig
from .gadgets import commitment_plain, lpi_plain, mask_ok_plain

ACCEPT = "accept"
HASH_MISMATCH = "hash-mismatch"
BAD_SIGNATURE = "bad-signature"
MISSING_REWARD = "missing-reward"


def address_for(label: str) -> int:
    """Deterministic 160-bit address for an actor label."""
    return int.from_bytes(hashlib.sha256(f"settlefl/addr/{label}".encode()).digest()[:20], "big")


@dataclass
class RewardMatrix:
    """N x T integer rewards; padding rows and not-yet-played columns stay 0."""

    V: list[list[int]]
    reward_cap: int = 2**64

    def __post_init__(self):
        width = {len(row) for row in self.V}
        if len(width) > 1:
            raise ValueError("ragged reward matrix")
        for row in self.V:
            for x in row:
                if not 0 <= x < self.reward_cap:
                    raise ValueError(f"reward {x} outside [0, {self.reward_cap})")

    @classmethod
    def zeros(cls, N: int, T: int) -> "RewardMatrix":
        return cls([[0] * T for _ in range(N)])

    @property
    def N(self) -> int:
        return len(self.V)

    @property
    def T(self) -> int:
        return len(self.V[0]) if self.V else 0

    def with_column(self, t: int, column: Sequence[int]) -> "RewardMatrix":
        if len(column) != self.N:
            raise ValueError("column length does not match N")
        rows = [list(row) for row in self.V]
        for i, x in enumerate(column):
            rows[i][t] = x
        return RewardMatrix(rows, self.reward_cap)

    def row_sums(self) -> list[int]:
        return [sum(row) for row in self.V]

    def copy_rows(self) -> list[list[int]]:
        return [list(row) for row in self.V]


@dataclass(frozen=True)
class ParticipantRoster:
    """Participant addresses in join order, zero-padded to N slots."""

    P: tuple[int, ...]

    def __post_init__(self):
        live = [p for p in self.P if p]
        if len(set(live)) != len(live):
            raise ValueError("duplicate participant address")

    @classmethod
    def from_labels(cls, labels: Sequence[str], N: int) -> "ParticipantRoster":
        if len(labels) > N:
            raise ValueError(f"{len(labels)} participants do not fit in {N} slots")
        return cls(tuple(address_for(x) for x in labels) + (0,) * (N - len(labels)))

    @property
    def effective(self) -> int:
        return sum(1 for p in self.P if p)

    def index_of(self, address: int) -> int:
        return self.P.index(address)


@dataclass(frozen=True)
class Commitment:
    C: int
    round: int
    sig: Signature
    rho: int

    def to_record(self) -> dict:
        return {"round": self.round, "C": str(self.C), "sig_R": str(self.sig.R), "sig_s": str(self.sig.s)}


def commit_round(
    V: RewardMatrix | Sequence[Sequence[int]],
    P: ParticipantRoster | Sequence[int],
    rho: int,
    keypair: KeyPair,
    r: int,
    config: HashConfig = DEFAULT_HASH,
) -> Commitment:
    """Commitment C^r over the cumulative matrix of columns 0..r."""
    rows = V.V if isinstance(V, RewardMatrix) else V
    addrs = P.P if isinstance(P, ParticipantRoster) else P
    T = len(rows[0])
    if r + 1 <= T and not mask_ok_plain(rows, lpi_plain(r + 1, T)):
        raise MaskViolation(f"matrix has rewards beyond round {r}")
    C = commitment_plain(rows, addrs, rho, config)
    return Commitment(C, r, sign(keypair, C, config), rho)


@dataclass(frozen=True)
class LocalView:
    V: list[list[int]]
    P: tuple[int, ...]
    rho: int
    pk: tuple[int, int]


@dataclass(frozen=True)
class CheckResult:
    verdict: str
    reason: str | None = None

    @property
    def accepted(self) -> bool:
        return self.verdict == ACCEPT


def participant_check(
    onchain_C: int,
    sig: Signature,
    view: LocalView,
    *,
    own_slot: int | None = None,
    own_reward: tuple[int, int] | None = None,
    config: HashConfig = DEFAULT_HASH,
) -> CheckResult:
    """Recompute C from the synced data and compare with what is on chain.

    ``own_reward`` is ``(round, amount)`` as the participant expects it; a
    mismatch in its own cell is reported as a missing reward.
    """
    if commitment_plain(view.V, view.P, view.rho, config) != onchain_C:
        return CheckResult("reject", HASH_MISMATCH)
    if not verify_sig(view.pk, sig, onchain_C, config):
        return CheckResult("reject", BAD_SIGNATURE)
    if own_slot is not None and own_reward is not None:
        t, amount = own_reward
        if view.V[own_slot][t] != amount:
            return CheckResult("reject", MISSING_REWARD)
    return CheckResult(ACCEPT)


@dataclass(frozen=True)
class SyncMessage:
    """Step p4: the aggregator's per-round sync to participants."""

    round: int
    V: tuple[tuple[int, ...], ...]
    P: tuple[int, ...]
    C: int
    sig: Signature


Interceptor = Callable[[str, SyncMessage], "SyncMessage | None"]


@dataclass
class BroadcastChannel:
    """Reliable in-process delivery with adversarial interception hooks.

    An interceptor sees ``(recipient, message)`` and returns the message to
    deliver, a replacement, or None to drop it.
    """

    interceptors: list[Interceptor] = field(default_factory=list)
    log: list[tuple[str, int]] = field(default_factory=list)

    def deliver(self, recipients: Sequence[str], msg: SyncMessage) -> dict[str, SyncMessage]:
        out: dict[str, SyncMessage] = {}
        for who in recipients:
            m: SyncMessage | None = msg
            for hook in self.interceptors:
                if m is None:
                    break
                m = hook(who, m)
            if m is not None:
                out[who] = m
                self.log.append((who, m.round))
        return out
