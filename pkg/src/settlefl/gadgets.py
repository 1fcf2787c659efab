"""Reusable circuit gadgets and their plain-evaluation twins.

Each circuit gadget takes a :class:`Builder` plus input linear combinations,
allocates and assigns its intermediate witnesses, and enforces its
constraints. The ``*_plain`` twin computes the same function on integers and
serves both as witness source and as test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from .errors import ArityExceeded, BatchIndexOutOfRange, EmptyInput, OutOfRange
from .field import (
    DEFAULT_HASH,
    EXPONENT_BITS,
    SIG_GENERATOR,
    HashConfig,
    permutation_params,
    sponge_hash,
)
from .r1cs import Builder, LinComb, as_lc

Matrix = Sequence[Sequence[int]]


@dataclass(frozen=True)
class GadgetOutput:
    outputs: list[LinComb]
    values: list[int]
    constraints_added: int


def run_gadget(b: Builder, fn, *args, **kwargs) -> GadgetOutput:
    """Invoke a gadget and record what it produced."""
    before = b.cs.constraint_count()
    out = fn(b, *args, **kwargs)
    outs = out if isinstance(out, list) else ([] if out is None else [out])
    return GadgetOutput(outs, [b.value(o) for o in outs], b.cs.constraint_count() - before)


def alloc_vector(b: Builder, values: Sequence[int], public: bool = False) -> list[LinComb]:
    return [b.alloc(v, public) for v in values]


def alloc_matrix(b: Builder, rows: Matrix) -> list[list[LinComb]]:
    return [alloc_vector(b, row) for row in rows]


# ---------------------------------------------------------------------------
# LPI


def lpi_plain(x: int, length: int) -> list[int]:
    if not 0 <= x <= length:
        raise OutOfRange(f"LPI input {x} outside [0, {length}]")
    return [1 if i < x else 0 for i in range(length)]


def lpi_transitions(y: Sequence) -> list:
    """Transition indicators c_0..c_T as linear functions of y."""
    T = len(y)
    c = [1 - as_lc(y[0])]
    c += [as_lc(y[i - 1]) - y[i] for i in range(1, T)]
    c.append(as_lc(y[T - 1]))
    return c


def lpi(b: Builder, x, length: int) -> list[LinComb]:
    """Prefix indicator ({1}^x, {0}^{length-x}).

    Besides the sum, booleanity and single-transition constraints, each inner
    transition indicator is forced boolean: the sum of all indicators
    telescopes to 1 for any y, so on its own it rules nothing out.
    """
    if length < 1:
        raise OutOfRange("LPI length must be positive")
    x = as_lc(x)
    xv = b.value(x)
    if xv > length:
        raise OutOfRange(f"LPI input {xv} outside [0, {length}]")
    y = alloc_vector(b, lpi_plain(xv, length))
    b.equal(sum(y, LinComb()), x)
    for yi in y:
        b.boolean(yi)
    c = lpi_transitions(y)
    for ci in c[1:-1]:
        b.boolean(ci)
    b.equal(sum(c, LinComb()), 1)
    return y


# ---------------------------------------------------------------------------
# IsZero


def is_zero(b: Builder, x) -> LinComb:
    x = as_lc(x)
    xv = b.value(x)
    inv = b.alloc(0 if xv == 0 else pow(xv, -1, b.p))
    b.hints.add(next(iter(inv.terms)))
    y = b.alloc(1 if xv == 0 else 0)
    b.enforce(x, inv, 1 - y)
    b.enforce(x, y, 0)
    return y


# ---------------------------------------------------------------------------
# sponge and modular hash


def _pow_small(b: Builder, u: LinComb, alpha: int, uv: int | None = None) -> tuple[LinComb, int]:
    """u^alpha by square-and-multiply; returns the output and its value."""
    p = b.p
    uv = b.value(u) if uv is None else uv
    acc, av = u, uv
    for bit in bin(alpha)[3:]:
        av = av * av % p
        acc = b.mul_known(acc, acc, av)
        if bit == "1":
            av = av * uv % p
            acc = b.mul_known(acc, u, av)
    return acc, av


def sponge(b: Builder, inputs: Sequence, config: HashConfig = DEFAULT_HASH) -> LinComb:
    """In-circuit H_m; (m + 1) * rounds S-boxes."""
    m = len(inputs)
    if m == 0:
        raise EmptyInput("sponge needs at least one input")
    if m > config.max_arity:
        raise ArityExceeded(f"arity {m} exceeds max_arity {config.max_arity}")
    p = b.p
    params = permutation_params(config, m + 1)
    state = [LinComb.const(m)] + [as_lc(x) for x in inputs]
    vals = [m % p] + [b.value(x) for x in state[1:]]
    for rc in params.round_constants:
        idx, boxed = [], []
        for s, sv, c in zip(state, vals, rc):
            out, ov = _pow_small(b, s + c, config.sbox_exponent, (sv + c) % p)
            idx.append(next(iter(out.terms)))
            boxed.append(ov)
        state = [LinComb(dict(zip(idx, row))) for row in params.mds]
        vals = [sum(mij * x for mij, x in zip(row, boxed)) % p for row in params.mds]
    return state[1]


def modular_hash_plain(xs: Sequence[int], rho: int, config: HashConfig = DEFAULT_HASH) -> int:
    n = len(xs)
    if n == 0:
        raise EmptyInput("modular hash of an empty vector")
    step = config.max_arity - 1
    y = rho
    for start in range(0, n, step):
        y = sponge_hash([y, *xs[start : start + step]], config)
    return y


def modular_chunks(n: int, config: HashConfig = DEFAULT_HASH) -> list[int]:
    step = config.max_arity - 1
    k = -(-n // step)
    return [min(n - i * step, step) for i in range(k)]


def modular_hash(b: Builder, xs: Sequence, rho, config: HashConfig = DEFAULT_HASH) -> LinComb:
    n = len(xs)
    if n == 0:
        raise EmptyInput("modular hash of an empty vector")
    step = config.max_arity - 1
    y = as_lc(rho)
    for start in range(0, n, step):
        y = sponge(b, [y, *xs[start : start + step]], config)
    return y


# ---------------------------------------------------------------------------
# batch extraction, vectorisation, row sums, masks


def batch_extract_plain(xs: Sequence[int], a: int, B: int) -> list[int]:
    n = len(xs)
    t = -(-n // B)
    if not 0 <= a < t:
        raise BatchIndexOutOfRange(f"batch {a} outside [0, {t})")
    return [xs[k] if k < n else 0 for k in range(a * B, a * B + B)]


def batch_extract(b: Builder, xs: Sequence, a, B: int) -> list[LinComb]:
    n = len(xs)
    t = -(-n // B)
    a = as_lc(a)
    av = b.value(a)
    if not 0 <= av < t:
        raise BatchIndexOutOfRange(f"batch {av} outside [0, {t})")
    e = [is_zero(b, a - i) for i in range(t)]
    S = [[LinComb() for _ in range(B)] for _ in range(t)]
    for k in range(t * B):
        i, j = divmod(k, B)
        if k < n:
            S[i][j] = b.mul(xs[k], e[i])
    return [sum((S[i][j] for i in range(t)), LinComb()) for j in range(B)]


def vec_row_major(V: Sequence[Sequence]) -> list:
    return [x for row in V for x in row]


def unvec(xs: Sequence, n_rows: int, n_cols: int) -> list[list]:
    if len(xs) != n_rows * n_cols:
        raise ValueError("length does not match shape")
    return [list(xs[i * n_cols : (i + 1) * n_cols]) for i in range(n_rows)]


def sum_row_plain(V: Matrix, r: Sequence[int]) -> list[int]:
    return [sum(x * rt for x, rt in zip(row, r)) for row in V]


def sum_row(b: Builder, V: Sequence[Sequence], r: Sequence) -> list[LinComb]:
    return [sum((b.mul(x, rt) for x, rt in zip(row, r)), LinComb()) for row in V]


def mask_ok_plain(V: Matrix, r: Sequence[int]) -> bool:
    return all(x == 0 for row in V for x, rt in zip(row, r) if rt == 0)


def mask_check(b: Builder, V: Sequence[Sequence], r: Sequence) -> None:
    for row in V:
        for x, rt in zip(row, r):
            b.enforce(x, 1 - as_lc(rt), 0)


# ---------------------------------------------------------------------------
# keys, signatures, commitments


def pk_digest_plain(pk: tuple[int, int], config: HashConfig = DEFAULT_HASH) -> int:
    return sponge_hash(pk, config)


def pk_digest(b: Builder, ax, ay, config: HashConfig = DEFAULT_HASH) -> LinComb:
    return sponge(b, [ax, ay], config)


def to_bits(b: Builder, x, nbits: int) -> list[LinComb]:
    """Little-endian bit decomposition with booleanity and recomposition."""
    x = as_lc(x)
    xv = b.value(x)
    if xv >> nbits:
        raise OutOfRange(f"value needs more than {nbits} bits")
    bits = [b.alloc((xv >> i) & 1) for i in range(nbits)]
    for bit in bits:
        b.boolean(bit)
    b.equal(sum((bit * (1 << i) for i, bit in enumerate(bits)), LinComb()), x)
    return bits


def signature_check(
    b: Builder, ax, h_a, msg, sig_r, sig_s, config: HashConfig = DEFAULT_HASH
) -> None:
    """Enforce g^s == R * A_x^e with e = H_3(R, h_A, msg)."""
    p = b.p
    e = sponge(b, [sig_r, h_a, msg], config)
    s_bits = to_bits(b, sig_s, EXPONENT_BITS)
    g_pow = LinComb.const(1)
    base = SIG_GENERATOR
    for bit in s_bits:
        g_pow = b.mul(g_pow, 1 + bit * (base - 1))
        base = base * base % p
    e_bits = to_bits(b, e, EXPONENT_BITS)
    ax = as_lc(ax)
    acc = LinComb.const(1)
    for bit in reversed(e_bits):
        sq = b.mul(acc, acc)
        t = b.mul(bit, ax - 1)
        acc = b.mul(sq, 1 + t)
    b.enforce(sig_r, acc, g_pow)


def commitment_plain(V: Matrix, P: Sequence[int], rho: int, config: HashConfig = DEFAULT_HASH) -> int:
    """C = H_3(H_M(vec V), H_M(P), rho), inner modular hashes seeded with 0."""
    return _commitment_cached(
        tuple(tuple(row) for row in V), tuple(P), rho % config.modulus, config
    )


@lru_cache(maxsize=256)
def _commitment_cached(V: tuple, P: tuple, rho: int, config: HashConfig) -> int:
    return sponge_hash(
        [modular_hash_plain(vec_row_major(V), 0, config), modular_hash_plain(P, 0, config), rho],
        config,
    )


def verify_commitment(
    b: Builder,
    V: Sequence[Sequence],
    P: Sequence,
    rho,
    ax,
    ay,
    sig_r,
    sig_s,
    config: HashConfig = DEFAULT_HASH,
    h_a=None,
) -> LinComb:
    """Recompute C from (V, P, rho) and check the aggregator's signature on it."""
    c = sponge(
        b,
        [modular_hash(b, vec_row_major(V), 0, config), modular_hash(b, P, 0, config), rho],
        config,
    )
    if h_a is None:
        h_a = pk_digest(b, ax, ay, config)
    signature_check(b, ax, h_a, c, sig_r, sig_s, config)
    return c
