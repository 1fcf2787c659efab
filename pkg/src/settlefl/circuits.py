"""Transition, challenge and distribution verifier circuits.

There is no SNARK backend. Proving synthesizes the circuit with a witness and
packages it as a :class:`SatisfiedInstance`; verifying re-checks every
constraint against the deployment's reference circuit and compares public
inputs. Constraint structure never depends on witness values, so the
reference circuit can be synthesized from dummy data.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

from . import gadgets as g
from .errors import (
    BatchIndexOutOfRange,
    OutOfRange,
    ShapeMismatch,
    WitnessGenerationFailed,
)
from .field import DEFAULT_HASH, HashConfig, KeyPair, Signature, keygen, sign
from .r1cs import Builder, ConstraintSystem, LinComb, PRIVATE

TRANSITION = "transition"
CHALLENGE = "challenge"
DISTRIBUTION = "distribution"

PUBLIC_NAMES = {
    TRANSITION: ("r", "C1", "C2", "h_A"),
    CHALLENGE: ("r", "C", "h_A"),
    DISTRIBUTION: ("r", "b", "C", "h_A", "s_p", "p_p"),
}


@dataclass(frozen=True)
class CircuitParams:
    N: int
    T: int
    B: int
    hash: HashConfig = DEFAULT_HASH

    def __post_init__(self):
        if self.N < 1 or self.T < 1 or self.B < 1:
            raise ValueError("N, T and B must be positive")

    @property
    def kappa(self) -> int:
        return self.hash.max_arity

    @property
    def num_batches(self) -> int:
        return -(-self.N // self.B)

    def digest(self, circuit_id: str) -> str:
        blob = json.dumps(
            {"id": circuit_id, "N": self.N, "T": self.T, "B": self.B, "hash": self.hash.to_dict()},
            sort_keys=True,
        )
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class Circuit:
    circuit_id: str
    params: CircuitParams
    cs: ConstraintSystem
    labels: dict[str, list[int]] = field(default_factory=dict)
    # IsZero inverses: free whenever their input is zero
    hints: frozenset[int] = frozenset()

    @property
    def params_digest(self) -> str:
        return self.params.digest(self.circuit_id)

    def constraint_count(self) -> int:
        return self.cs.constraint_count()


@dataclass(frozen=True)
class SatisfiedInstance:
    circuit_id: str
    params_digest: str
    public_inputs: tuple[int, ...]
    witness: tuple[int, ...]
    satisfied: bool = True

    def to_json(self) -> str:
        return json.dumps(
            {
                "circuit": self.circuit_id,
                "params_digest": self.params_digest,
                "public_inputs": [str(x) for x in self.public_inputs],
                "witness": [str(x) for x in self.witness],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "SatisfiedInstance":
        d = json.loads(text)
        return cls(
            d["circuit"],
            d["params_digest"],
            tuple(int(x) for x in d["public_inputs"]),
            tuple(int(x) for x in d["witness"]),
        )


def flatten_publics(circuit_id: str, publics: dict) -> tuple[int, ...]:
    out: list[int] = []
    for name in PUBLIC_NAMES[circuit_id]:
        v = publics[name]
        out.extend(v if isinstance(v, (list, tuple)) else [v])
    return tuple(out)


# ---------------------------------------------------------------------------
# helpers


def _check_matrix(V: Sequence[Sequence[int]], params: CircuitParams) -> None:
    if len(V) != params.N or any(len(row) != params.T for row in V):
        raise WitnessGenerationFailed(f"matrix must be {params.N}x{params.T}")


def _check_vector(P: Sequence[int], params: CircuitParams) -> None:
    if len(P) != params.N:
        raise WitnessGenerationFailed(f"participant vector must have length {params.N}")


def _label(b: Builder, labels: dict, name: str, lcs) -> None:
    lcs = lcs if isinstance(lcs, list) else [lcs]
    labels[name] = [next(iter(x.terms)) for x in lcs]


def _signatures(
    msgs: Sequence[int],
    keypair: KeyPair | None,
    signatures: Sequence[Signature] | None,
    config: HashConfig,
) -> list[Signature]:
    if signatures is not None:
        return list(signatures)
    if keypair is None:
        raise WitnessGenerationFailed("need a keypair or captured signatures")
    return [sign(keypair, m, config) for m in msgs]


def _finish(circuit_id: str, params: CircuitParams, b: Builder, labels: dict, publics: dict):
    ok, idx = b.cs.is_satisfied(b.values)
    if not ok:
        raise WitnessGenerationFailed(f"{circuit_id}: constraint {idx} unsatisfiable for inputs")
    circuit = Circuit(circuit_id, params, b.cs.seal(), labels, frozenset(b.hints))
    inst = SatisfiedInstance(
        circuit_id,
        circuit.params_digest,
        flatten_publics(circuit_id, publics),
        tuple(b.values),
    )
    return circuit, inst


# ---------------------------------------------------------------------------
# transition


def transition_publics(r, V2, p2, p1_count, rho, pk, params: CircuitParams) -> dict:
    cfg = params.hash
    r1 = g.lpi_plain(r, params.T)
    V1 = [[x * m for x, m in zip(row, r1)] for row in V2]
    rp = g.lpi_plain(p1_count, params.N)
    p1 = [x * m for x, m in zip(p2, rp)]
    return {
        "r": r,
        "C1": g.commitment_plain(V1, p1, rho, cfg),
        "C2": g.commitment_plain(V2, p2, rho, cfg),
        "h_A": g.pk_digest_plain(pk, cfg),
        "_V1": V1,
        "_p1": p1,
    }


def _synth_transition(params, r, V2, p2, p1_count, rho, pk, signatures):
    cfg = params.hash
    if not 0 <= r < params.T:
        raise WitnessGenerationFailed(f"round {r} outside [0, {params.T - 1}]")
    _check_matrix(V2, params)
    _check_vector(p2, params)
    if not 0 <= p1_count <= params.N:
        raise WitnessGenerationFailed(f"p1_count {p1_count} outside [0, {params.N}]")
    pubs = transition_publics(r, V2, p2, p1_count, rho, pk, params)
    sig1, sig2 = signatures

    b = Builder(cfg.modulus)
    labels: dict[str, list[int]] = {}
    r_pub = b.alloc(r, public=True)
    c1_pub = b.alloc(pubs["C1"], public=True)
    c2_pub = b.alloc(pubs["C2"], public=True)
    ha_pub = b.alloc(pubs["h_A"], public=True)
    for name, lc in (("r", r_pub), ("C1", c1_pub), ("C2", c2_pub), ("h_A", ha_pub)):
        _label(b, labels, name, lc)

    V2v = g.alloc_matrix(b, V2)
    p2v = g.alloc_vector(b, p2)
    p1c = b.alloc(p1_count)
    rho_v = b.alloc(rho)
    ax, ay = b.alloc(pk[0]), b.alloc(pk[1])
    s1r, s1s = b.alloc(sig1.R), b.alloc(sig1.s)
    s2r, s2s = b.alloc(sig2.R), b.alloc(sig2.s)
    _label(b, labels, "rho", rho_v)
    _label(b, labels, "p1_count", p1c)

    try:
        r2 = g.lpi(b, r_pub + 1, params.T)
        if not g.mask_ok_plain(V2, [b.value(x) for x in r2]):
            raise WitnessGenerationFailed(f"V2 has rewards beyond round {r + 1}")
        g.mask_check(b, V2v, r2)
        r1 = g.lpi(b, r_pub, params.T)
        V1v = [[b.mul(x, m) for x, m in zip(row, r1)] for row in V2v]
        rp = g.lpi(b, p1c, params.N)
        p1v = [b.mul(x, m) for x, m in zip(p2v, rp)]
    except OutOfRange as exc:
        raise WitnessGenerationFailed(str(exc)) from exc
    h_a = g.pk_digest(b, ax, ay, cfg)
    b.equal(h_a, ha_pub)
    c1 = g.verify_commitment(b, V1v, p1v, rho_v, ax, ay, s1r, s1s, cfg, h_a=h_a)
    b.equal(c1, c1_pub)
    c2 = g.verify_commitment(b, V2v, p2v, rho_v, ax, ay, s2r, s2s, cfg, h_a=h_a)
    b.equal(c2, c2_pub)
    return _finish(TRANSITION, params, b, labels, pubs)


def prove_transition(
    params: CircuitParams,
    r: int,
    V2,
    p2,
    p1_count: int,
    rho: int,
    keypair: KeyPair | None = None,
    *,
    pk=None,
    signatures: Sequence[Signature] | None = None,
    expected: tuple[int, int] | None = None,
) -> SatisfiedInstance:
    """Prove C^r -> C^{r+1} consistency; ``expected`` pins (C1, C2) to on-chain values."""
    pk = pk if pk is not None else keypair.pk
    pubs = transition_publics(r, V2, p2, p1_count, rho, pk, params)
    if expected is not None and (pubs["C1"], pubs["C2"]) != tuple(expected):
        raise WitnessGenerationFailed("no transition witness links the expected commitments")
    sigs = _signatures((pubs["C1"], pubs["C2"]), keypair, signatures, params.hash)
    return _synth_transition(params, r, V2, p2, p1_count, rho, pk, sigs)[1]


# ---------------------------------------------------------------------------
# challenge


def _synth_challenge(params, r, V, p, rho, pk, sig):
    cfg = params.hash
    _check_matrix(V, params)
    _check_vector(p, params)
    if not 0 <= r <= params.T:
        raise WitnessGenerationFailed(f"round {r} outside [0, {params.T}]")
    if not g.mask_ok_plain(V, g.lpi_plain(r, params.T)):
        raise WitnessGenerationFailed(f"matrix has rewards beyond the first {r} columns")
    pubs = {"r": r, "C": g.commitment_plain(V, p, rho, cfg), "h_A": g.pk_digest_plain(pk, cfg)}

    b = Builder(cfg.modulus)
    labels: dict[str, list[int]] = {}
    r_pub = b.alloc(r, public=True)
    c_pub = b.alloc(pubs["C"], public=True)
    ha_pub = b.alloc(pubs["h_A"], public=True)
    for name, lc in (("r", r_pub), ("C", c_pub), ("h_A", ha_pub)):
        _label(b, labels, name, lc)
    Vv = g.alloc_matrix(b, V)
    pv = g.alloc_vector(b, p)
    rho_v = b.alloc(rho)
    ax, ay = b.alloc(pk[0]), b.alloc(pk[1])
    sr, ss = b.alloc(sig.R), b.alloc(sig.s)
    _label(b, labels, "rho", rho_v)

    rr = g.lpi(b, r_pub, params.T)
    g.mask_check(b, Vv, rr)
    h_a = g.pk_digest(b, ax, ay, cfg)
    b.equal(h_a, ha_pub)
    c = g.verify_commitment(b, Vv, pv, rho_v, ax, ay, sr, ss, cfg, h_a=h_a)
    b.equal(c, c_pub)
    return _finish(CHALLENGE, params, b, labels, pubs)


def prove_challenge(
    params: CircuitParams,
    r: int,
    V,
    p,
    rho: int,
    keypair: KeyPair | None = None,
    *,
    pk=None,
    signature: Signature | None = None,
) -> SatisfiedInstance:
    pk = pk if pk is not None else keypair.pk
    C = g.commitment_plain(V, p, rho, params.hash)
    (sig,) = _signatures((C,), keypair, None if signature is None else [signature], params.hash)
    return _synth_challenge(params, r, V, p, rho, pk, sig)[1]


# ---------------------------------------------------------------------------
# distribution


def distribution_publics(r, bidx, V, p, rho, pk, params: CircuitParams) -> dict:
    cfg = params.hash
    s = g.sum_row_plain(V, g.lpi_plain(r + 1, params.T))
    return {
        "r": r,
        "b": bidx,
        "C": g.commitment_plain(V, p, rho, cfg),
        "h_A": g.pk_digest_plain(pk, cfg),
        "s_p": g.batch_extract_plain(s, bidx, params.B),
        "p_p": g.batch_extract_plain(p, bidx, params.B),
    }


def _synth_distribution(params, r, bidx, V, p, rho, pk, sig):
    cfg = params.hash
    _check_matrix(V, params)
    _check_vector(p, params)
    if not 0 <= bidx < params.num_batches:
        raise BatchIndexOutOfRange(f"batch {bidx} outside [0, {params.num_batches})")
    if not 0 <= r < params.T:
        raise WitnessGenerationFailed(f"round {r} outside [0, {params.T - 1}]")
    if not g.mask_ok_plain(V, g.lpi_plain(r + 1, params.T)):
        raise WitnessGenerationFailed(f"matrix has rewards beyond round {r}")
    pubs = distribution_publics(r, bidx, V, p, rho, pk, params)

    b = Builder(cfg.modulus)
    labels: dict[str, list[int]] = {}
    r_pub = b.alloc(r, public=True)
    b_pub = b.alloc(bidx, public=True)
    c_pub = b.alloc(pubs["C"], public=True)
    ha_pub = b.alloc(pubs["h_A"], public=True)
    sp_pub = g.alloc_vector(b, pubs["s_p"], public=True)
    pp_pub = g.alloc_vector(b, pubs["p_p"], public=True)
    for name, lc in (("r", r_pub), ("b", b_pub), ("C", c_pub), ("h_A", ha_pub), ("s_p", sp_pub), ("p_p", pp_pub)):
        _label(b, labels, name, lc)
    Vv = g.alloc_matrix(b, V)
    pv = g.alloc_vector(b, p)
    rho_v = b.alloc(rho)
    ax, ay = b.alloc(pk[0]), b.alloc(pk[1])
    sr, ss = b.alloc(sig.R), b.alloc(sig.s)
    _label(b, labels, "rho", rho_v)

    rr = g.lpi(b, r_pub + 1, params.T)
    g.mask_check(b, Vv, rr)
    s = g.sum_row(b, Vv, rr)
    for out, pub in zip(g.batch_extract(b, pv, b_pub, params.B), pp_pub):
        b.equal(out, pub)
    for out, pub in zip(g.batch_extract(b, s, b_pub, params.B), sp_pub):
        b.equal(out, pub)
    h_a = g.pk_digest(b, ax, ay, cfg)
    b.equal(h_a, ha_pub)
    c = g.verify_commitment(b, Vv, pv, rho_v, ax, ay, sr, ss, cfg, h_a=h_a)
    b.equal(c, c_pub)
    return _finish(DISTRIBUTION, params, b, labels, pubs)


def prove_distribution(
    params: CircuitParams,
    r: int,
    bidx: int,
    V,
    p,
    rho: int,
    keypair: KeyPair | None = None,
    *,
    pk=None,
    signature: Signature | None = None,
) -> SatisfiedInstance:
    """Prove the batch ``bidx`` payout of the commitment covering rounds 0..r."""
    pk = pk if pk is not None else keypair.pk
    C = g.commitment_plain(V, p, rho, params.hash)
    (sig,) = _signatures((C,), keypair, None if signature is None else [signature], params.hash)
    return _synth_distribution(params, r, bidx, V, p, rho, pk, sig)[1]


# ---------------------------------------------------------------------------
# reference circuits and verification

_SHAPE_KEY = keygen("settlefl/shape")


def _dummy(params: CircuitParams):
    V = [[0] * params.T for _ in range(params.N)]
    P = [0] * params.N
    return V, P


@lru_cache(maxsize=32)
def build_transition(params: CircuitParams) -> Circuit:
    V, P = _dummy(params)
    pubs = transition_publics(0, V, P, 0, 0, _SHAPE_KEY.pk, params)
    sigs = [sign(_SHAPE_KEY, pubs["C1"], params.hash), sign(_SHAPE_KEY, pubs["C2"], params.hash)]
    return _synth_transition(params, 0, V, P, 0, 0, _SHAPE_KEY.pk, sigs)[0]


@lru_cache(maxsize=32)
def build_challenge(params: CircuitParams) -> Circuit:
    V, P = _dummy(params)
    sig = sign(_SHAPE_KEY, g.commitment_plain(V, P, 0, params.hash), params.hash)
    return _synth_challenge(params, 0, V, P, 0, _SHAPE_KEY.pk, sig)[0]


@lru_cache(maxsize=32)
def build_distribution(params: CircuitParams) -> Circuit:
    V, P = _dummy(params)
    sig = sign(_SHAPE_KEY, g.commitment_plain(V, P, 0, params.hash), params.hash)
    return _synth_distribution(params, 0, 0, V, P, 0, _SHAPE_KEY.pk, sig)[0]


BUILDERS = {
    TRANSITION: build_transition,
    CHALLENGE: build_challenge,
    DISTRIBUTION: build_distribution,
}


def build(circuit_id: str, params: CircuitParams) -> Circuit:
    return BUILDERS[circuit_id](params)


def verify_instance(circuit: Circuit, instance: SatisfiedInstance, expected_publics) -> bool:
    """Simulated SNARK verification against the reference circuit."""
    if instance.circuit_id != circuit.circuit_id or instance.params_digest != circuit.params_digest:
        raise ShapeMismatch(
            f"instance for {instance.circuit_id} does not match circuit {circuit.circuit_id}"
        )
    cs = circuit.cs
    if len(instance.witness) != cs.num_variables:
        raise ShapeMismatch("witness length does not match circuit")
    if isinstance(expected_publics, dict):
        expected_publics = flatten_publics(circuit.circuit_id, expected_publics)
    p = cs.p
    expected = tuple(int(x) % p for x in expected_publics)
    public_slice = tuple(instance.witness[i] for i in cs.public_indices())
    if public_slice != tuple(x % p for x in instance.public_inputs) or public_slice != expected:
        return False
    ok, _ = cs.is_satisfied(instance.witness)
    return ok
