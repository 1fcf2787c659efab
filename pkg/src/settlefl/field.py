"""Prime-field arithmetic, the algebraic sponge hash, and aggregator signatures.

The hash is a Poseidon-style permutation (x^alpha S-box, full rounds, Cauchy
MDS mixing) with round constants expanded from a seed string. It keeps the
arity-bounded interface the circuits need but is NOT a vetted primitive.

Signatures are Schnorr signatures in the multiplicative group of the same
prime field. They verify from public data alone, so a participant holding a
broadcast signature can re-prove it inside a circuit without the secret key.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from .errors import ArityExceeded, ConfigInvalid, EmptyInput, ZeroInverse

BN254_R = 21888242871839275222246405745257275088548364400416034343698204186575808495617

# Bases for the two public-key coordinates. 5 generates F_r^* for BN254.
SIG_GENERATOR = 5
SIG_SECOND_BASE = 7
# Exponents are decomposed into this many bits in-circuit.
EXPONENT_BITS = 254


@dataclass(frozen=True)
class Field:
    p: int = BN254_R

    def reduce(self, x: int) -> int:
        return x % self.p

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.p

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.p

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.p

    def neg(self, a: int) -> int:
        return (-a) % self.p

    def inv(self, a: int) -> int:
        a %= self.p
        if a == 0:
            raise ZeroInverse("0 has no multiplicative inverse")
        return pow(a, -1, self.p)

    def pow(self, a: int, e: int) -> int:
        return pow(a, e, self.p)


DEFAULT_FIELD = Field()


class FieldElement:
    """Canonical element of F_p. Immutable; arithmetic stays in the same field."""

    __slots__ = ("value", "p")

    def __init__(self, value: int, p: int = BN254_R):
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "value", value % p)

    def __setattr__(self, name, value):
        raise AttributeError("FieldElement is immutable")

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.p != self.p:
                raise ValueError("field mismatch")
            return other.value
        if isinstance(other, int):
            return other % self.p
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else FieldElement(self.value + o, self.p)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else FieldElement(self.value - o, self.p)

    def __rsub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else FieldElement(o - self.value, self.p)

    def __mul__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else FieldElement(self.value * o, self.p)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self.value, self.p)

    def inverse(self) -> "FieldElement":
        return FieldElement(Field(self.p).inv(self.value), self.p)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self * FieldElement(o, self.p).inverse()

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.p == other.p and self.value == other.value
        if isinstance(other, int):
            return self.value == other % self.p
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.p))

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"FieldElement({self.value})"


def fe_add(a: FieldElement, b: FieldElement) -> FieldElement:
    return a + b


def fe_mul(a: FieldElement, b: FieldElement) -> FieldElement:
    return a * b


def fe_mul_inv(a: FieldElement) -> FieldElement:
    return a.inverse()


# --------------------------------------------------------------------------
# sponge hash


@dataclass(frozen=True)
class HashConfig:
    max_arity: int = 16
    rounds: int = 8
    sbox_exponent: int = 5
    seed: str = "settlefl/sponge/v1"
    modulus: int = BN254_R

    def __post_init__(self):
        if not 2 <= self.max_arity <= 16:
            raise ConfigInvalid(f"max_arity must be in [2, 16], got {self.max_arity}")
        if self.rounds < 1:
            raise ConfigInvalid("rounds must be positive")
        if self.sbox_exponent < 3 or self.sbox_exponent % 2 == 0:
            raise ConfigInvalid("sbox_exponent must be a small odd integer >= 3")
        if math.gcd(self.sbox_exponent, self.modulus - 1) != 1:
            raise ConfigInvalid("sbox_exponent must be coprime to p-1")

    @property
    def field(self) -> Field:
        return Field(self.modulus)

    def to_dict(self) -> dict:
        return {
            "max_arity": self.max_arity,
            "rounds": self.rounds,
            "sbox_exponent": self.sbox_exponent,
            "seed": self.seed,
            "modulus": str(self.modulus),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HashConfig":
        known = {"max_arity", "rounds", "sbox_exponent", "seed", "modulus"}
        extra = set(d) - known
        if extra:
            raise ConfigInvalid(f"unknown hash config keys: {sorted(extra)}")
        kw = dict(d)
        if "modulus" in kw:
            kw["modulus"] = int(str(kw["modulus"]))
        return cls(**kw)


DEFAULT_HASH = HashConfig()


@dataclass(frozen=True)
class PermutationParams:
    width: int
    round_constants: tuple[tuple[int, ...], ...]
    mds: tuple[tuple[int, ...], ...]


@lru_cache(maxsize=None)
def permutation_params(config: HashConfig, width: int) -> PermutationParams:
    p = config.modulus
    rcs = []
    counter = 0
    for _ in range(config.rounds):
        row = []
        for _ in range(width):
            digest = hashlib.sha256(f"{config.seed}|w{width}|{counter}".encode()).digest()
            row.append(int.from_bytes(digest, "big") % p)
            counter += 1
        rcs.append(tuple(row))
    # Cauchy matrix 1/(x_i + y_j) with x_i = i, y_j = width + j is invertible.
    mds = tuple(
        tuple(pow(i + width + j, -1, p) for j in range(width)) for i in range(width)
    )
    return PermutationParams(width, tuple(rcs), mds)


def permute(state: list[int], config: HashConfig) -> list[int]:
    p = config.modulus
    alpha = config.sbox_exponent
    params = permutation_params(config, len(state))
    for rc in params.round_constants:
        state = [pow((s + c) % p, alpha, p) for s, c in zip(state, rc)]
        state = [sum(m * s for m, s in zip(row, state)) % p for row in params.mds]
    return state


def initial_state(inputs: Sequence[int], config: HashConfig) -> list[int]:
    """Capacity slot holds the arity, so H_m and H_{m+1} never share inputs."""
    return [len(inputs)] + [x % config.modulus for x in inputs]


def sponge_hash(inputs: Sequence[int], config: HashConfig = DEFAULT_HASH) -> int:
    """H_m(inputs) for 1 <= m <= max_arity."""
    m = len(inputs)
    if m == 0:
        raise EmptyInput("sponge_hash needs at least one input")
    if m > config.max_arity:
        raise ArityExceeded(f"arity {m} exceeds max_arity {config.max_arity}")
    return permute(initial_state(inputs, config), config)[1]


# --------------------------------------------------------------------------
# signatures


@dataclass(frozen=True)
class KeyPair:
    sk: int
    pk: tuple[int, int]


@dataclass(frozen=True)
class Signature:
    R: int
    s: int

    def as_tuple(self) -> tuple[int, int]:
        return (self.R, self.s)


def pk_digest(pk: tuple[int, int], config: HashConfig = DEFAULT_HASH) -> int:
    return sponge_hash(pk, config)


def keygen(seed, config: HashConfig = DEFAULT_HASH) -> KeyPair:
    p = config.modulus
    digest = hashlib.sha256(f"settlefl/keygen/{seed}".encode()).digest()
    sk = int.from_bytes(digest, "big") % (p - 2) + 1
    return KeyPair(sk, (pow(SIG_GENERATOR, sk, p), pow(SIG_SECOND_BASE, sk, p)))


def _challenge(R: int, h_a: int, m: int, config: HashConfig) -> int:
    return sponge_hash((R, h_a, m), config)


def sign(keypair: KeyPair, m: int, config: HashConfig = DEFAULT_HASH) -> Signature:
    p = config.modulus
    nonce_src = f"settlefl/nonce/{keypair.sk}/{m % p}".encode()
    k = int.from_bytes(hashlib.sha256(nonce_src).digest(), "big") % (p - 2) + 1
    R = pow(SIG_GENERATOR, k, p)
    e = _challenge(R, pk_digest(keypair.pk, config), m, config)
    s = (k + e * keypair.sk) % (p - 1)
    return Signature(R, s)


def verify_sig(
    pk: tuple[int, int], sig: Signature, m: int, config: HashConfig = DEFAULT_HASH
) -> bool:
    p = config.modulus
    R, s = sig.R, sig.s
    ax, ay = pk
    if not (0 < R < p and 0 <= s < p - 1 and 0 < ax < p and 0 < ay < p):
        return False
    e = _challenge(R, pk_digest(pk, config), m, config)
    return pow(SIG_GENERATOR, s, p) == R * pow(ax, e, p) % p
