import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from settlefl.errors import ArityExceeded, ConfigInvalid, EmptyInput, ZeroInverse
from settlefl.field import (
    BN254_R,
    DEFAULT_HASH,
    FieldElement,
    HashConfig,
    Signature,
    fe_add,
    fe_mul,
    fe_mul_inv,
    keygen,
    permutation_params,
    pk_digest,
    sign,
    sponge_hash,
    verify_sig,
)

P = BN254_R
elements = st.integers(min_value=0, max_value=P - 1)


def test_add_identity_and_wraparound():
    assert fe_add(FieldElement(0), FieldElement(12345)) == FieldElement(12345)
    assert int(fe_add(FieldElement(P - 1), FieldElement(1))) == 0


def test_add_and_mul_match_bigint_oracle():
    rng = random.Random(1)
    for _ in range(1000):
        a, b = rng.randrange(P), rng.randrange(P)
        assert int(fe_add(FieldElement(a), FieldElement(b))) == (a + b) % P
        assert int(fe_mul(FieldElement(a), FieldElement(b))) == (a * b) % P


def test_inverse_multiplies_back():
    rng = random.Random(2)
    assert int(fe_mul_inv(FieldElement(1))) == 1
    for _ in range(1000):
        a = FieldElement(rng.randrange(1, P))
        assert int(fe_mul(a, fe_mul_inv(a))) == 1


def test_inverse_of_zero_raises():
    with pytest.raises(ZeroInverse):
        fe_mul_inv(FieldElement(0))


@given(elements, elements)
def test_values_stay_canonical(a, b):
    x, y = FieldElement(a), FieldElement(b)
    for z in (x + y, x - y, x * y, -x):
        assert 0 <= int(z) < P


def test_field_element_is_immutable():
    x = FieldElement(3)
    with pytest.raises(AttributeError):
        x.value = 4


def test_large_inputs_reduce():
    assert FieldElement(P + 5) == FieldElement(5)
    assert FieldElement(-1) == FieldElement(P - 1)


# -- hash ----------------------------------------------------------------------


def test_hash_deterministic():
    assert sponge_hash([1, 2, 3]) == sponge_hash([1, 2, 3])


def test_hash_is_arity_separated():
    assert sponge_hash([5]) != sponge_hash([5, 0])
    assert sponge_hash([0]) != sponge_hash([0, 0])


def test_hash_bounds():
    with pytest.raises(EmptyInput):
        sponge_hash([])
    with pytest.raises(ArityExceeded):
        sponge_hash(list(range(17)))
    sponge_hash(list(range(16)))


def test_no_collisions_in_10k_samples():
    rng = random.Random(3)
    seen = {}
    for _ in range(10_000):
        xs = tuple(rng.randrange(P) for _ in range(rng.randint(1, 4)))
        h = sponge_hash(xs)
        assert seen.setdefault(h, xs) == xs
    assert len(seen) >= 9_999


@pytest.mark.parametrize("kw", [{"max_arity": 1}, {"max_arity": 17}, {"rounds": 0}, {"sbox_exponent": 4}, {"sbox_exponent": 3}])
def test_hash_config_rejects_bad_values(kw):
    # 3 divides p - 1 for this prime, so x^3 would not be a permutation
    with pytest.raises(ConfigInvalid):
        HashConfig(**kw)


def test_hash_config_roundtrip():
    cfg = HashConfig(max_arity=8, rounds=4, seed="x")
    assert HashConfig.from_dict(cfg.to_dict()) == cfg
    assert sponge_hash([1, 2], cfg) != sponge_hash([1, 2])


def test_mds_is_invertible():
    from sympy import Matrix

    mds = permutation_params(DEFAULT_HASH, 4).mds
    assert Matrix(mds).det() % P != 0


# -- signatures ------------------------------------------------------------------


def test_keygen_deterministic():
    assert keygen("a") == keygen("a")
    assert keygen("a").pk != keygen("b").pk


@settings(max_examples=50, deadline=None)
@given(st.text(max_size=8), elements)
def test_sign_then_verify(seed, m):
    kp = keygen(seed)
    assert verify_sig(kp.pk, sign(kp, m), m)


def test_signature_perturbations_fail():
    kp = keygen("signer")
    m = 424242
    sig = sign(kp, m)
    assert not verify_sig(kp.pk, Signature(sig.R + 1, sig.s), m)
    assert not verify_sig(kp.pk, Signature(sig.R, sig.s + 1), m)
    assert not verify_sig(kp.pk, sig, m + 1)
    assert not verify_sig(keygen("other").pk, sig, m)


def test_pk_digest_order_matters():
    ax, ay = keygen("k").pk
    assert pk_digest((ax, ay)) == sponge_hash([ax, ay])
    assert pk_digest((ax, ay)) != pk_digest((ay, ax))
