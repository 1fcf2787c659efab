import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gadget_trials import GADGET_TRIALS, SMALL_HASH, run_gadget_trials
from settlefl import gadgets as g
from settlefl.errors import ArityExceeded, BatchIndexOutOfRange, EmptyInput, OutOfRange
from settlefl.field import DEFAULT_HASH, keygen, sign, sponge_hash
from settlefl.r1cs import Builder, LinComb


def satisfied(b: Builder) -> bool:
    return b.cs.is_satisfied(b.values)[0]


# -- LPI -----------------------------------------------------------------------


def test_lpi_examples():
    assert g.lpi_plain(3, 5) == [1, 1, 1, 0, 0]
    assert g.lpi_plain(0, 4) == [0, 0, 0, 0]
    assert g.lpi_plain(4, 4) == [1, 1, 1, 1]
    for x, T in ((3, 5), (0, 4), (4, 4)):
        b = Builder()
        y = g.lpi(b, b.alloc(x), T)
        assert [b.value(v) for v in y] == g.lpi_plain(x, T)
        assert satisfied(b)


def test_lpi_rejects_two_transitions():
    b = Builder()
    y = g.lpi(b, b.alloc(2), 5)
    for v, val in zip(y, (1, 0, 1, 0, 0)):
        b.values[next(iter(v.terms))] = val
    assert not satisfied(b)


def test_lpi_out_of_range():
    with pytest.raises(OutOfRange):
        g.lpi_plain(6, 5)
    b = Builder()
    with pytest.raises(OutOfRange):
        g.lpi(b, b.alloc(6), 5)


@settings(max_examples=100)
@given(st.integers(1, 20).flatmap(lambda T: st.tuples(st.just(T), st.lists(st.integers(0, 1), min_size=T, max_size=T))))
def test_lpi_accepts_only_prefixes(case):
    """Any boolean y with the right sum is accepted iff it is a prefix of ones."""
    T, y = case
    b = Builder()
    out = g.lpi(b, b.alloc(sum(y)), T)
    for v, val in zip(out, y):
        b.values[next(iter(v.terms))] = val
    assert satisfied(b) == (y == g.lpi_plain(sum(y), T))


# -- IsZero ----------------------------------------------------------------------


def test_is_zero_examples():
    b = Builder()
    assert b.value(g.is_zero(b, b.alloc(0))) == 1
    b = Builder()
    x = b.alloc(7)
    y = g.is_zero(b, x)
    assert b.value(y) == 0
    inv = next(iter(b.hints))
    assert b.values[inv] * 7 % b.p == 1
    assert satisfied(b)
    # forged: claim 7 is zero
    b.values[next(iter(y.terms))] = 1
    b.values[inv] = 0
    assert not satisfied(b)


# -- sponge and modular hash --------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 2**254), min_size=1, max_size=16))
def test_sponge_matches_native(xs):
    b = Builder()
    out = g.sponge(b, [b.alloc(x) for x in xs])
    assert b.value(out) == sponge_hash(xs)
    assert satisfied(b)


def test_sponge_cost_is_three_per_sbox():
    for m in (1, 2, 15):
        b = Builder()
        g.sponge(b, [b.alloc(i) for i in range(m)])
        assert b.cs.constraint_count() == 3 * (m + 1) * DEFAULT_HASH.rounds


def test_sponge_bounds():
    with pytest.raises(EmptyInput):
        g.sponge(Builder(), [])
    with pytest.raises(ArityExceeded):
        g.sponge(Builder(), [LinComb.const(0)] * 17)


def test_modular_hash_chunking():
    assert g.modular_chunks(15) == [15]
    assert g.modular_chunks(20) == [15, 5]
    assert g.modular_chunks(31) == [15, 15, 1]
    xs = list(range(15))
    assert g.modular_hash_plain(xs, 9) == sponge_hash([9] + xs)
    xs = list(range(20))
    inner = sponge_hash([9] + xs[:15])
    assert g.modular_hash_plain(xs, 9) == sponge_hash([inner] + xs[15:])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 10**6), min_size=1, max_size=40), st.integers(0, 2**64))
def test_modular_hash_matches_native(xs, rho):
    b = Builder()
    out = g.modular_hash(b, [b.alloc(x) for x in xs], b.alloc(rho), SMALL_HASH)
    assert b.value(out) == g.modular_hash_plain(xs, rho, SMALL_HASH)


# -- batch extraction, reshape, row sums, mask ------------------------------------


def test_batch_extract_examples():
    xs = [10, 11, 12, 13, 14, 15]
    assert g.batch_extract_plain(xs, 1, 2) == [12, 13]
    assert g.batch_extract_plain([1, 2, 3, 4, 5], 2, 2) == [5, 0]
    with pytest.raises(BatchIndexOutOfRange):
        g.batch_extract_plain(xs, 3, 2)
    b = Builder()
    with pytest.raises(BatchIndexOutOfRange):
        g.batch_extract(b, [b.alloc(x) for x in xs], b.alloc(3), 2)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 40), st.integers(1, 8), st.data())
def test_batch_extract_every_index(n, B, data):
    xs = data.draw(st.lists(st.integers(0, 10**9), min_size=n, max_size=n))
    for a in range(-(-n // B)):
        b = Builder()
        out = g.batch_extract(b, [b.alloc(x) for x in xs], b.alloc(a), B)
        assert [b.value(o) for o in out] == g.batch_extract_plain(xs, a, B)
        assert satisfied(b)


def test_vec_examples():
    assert g.vec_row_major([[1, 2], [3, 4]]) == [1, 2, 3, 4]
    assert g.vec_row_major([[7]]) == [7]


@given(st.integers(1, 6), st.integers(1, 6), st.data())
def test_vec_roundtrip(n, t, data):
    V = data.draw(st.lists(st.lists(st.integers(), min_size=t, max_size=t), min_size=n, max_size=n))
    assert g.unvec(g.vec_row_major(V), n, t) == V


def test_sum_row_examples():
    V = [[1, 2, 3], [4, 5, 6]]
    assert g.sum_row_plain(V, [1, 1, 1]) == [6, 15]
    assert g.sum_row_plain(V, [0, 0, 0]) == [0, 0]


@given(st.integers(1, 5), st.integers(1, 6), st.data())
def test_sum_row_prefix_oracle(n, T, data):
    V = data.draw(st.lists(st.lists(st.integers(0, 10**6), min_size=T, max_size=T), min_size=n, max_size=n))
    x = data.draw(st.integers(0, T))
    b = Builder()
    out = g.sum_row(b, [[b.alloc(v) for v in row] for row in V], [b.alloc(v) for v in g.lpi_plain(x, T)])
    assert [b.value(o) for o in out] == [sum(row[:x]) for row in V]


def _mask_builder(V, r):
    b = Builder()
    g.mask_check(b, [[b.alloc(v) for v in row] for row in V], [b.alloc(v) for v in r])
    return b


def test_mask_check_examples():
    assert satisfied(_mask_builder([[1, 2, 0], [3, 0, 0]], [1, 1, 0]))
    assert not satisfied(_mask_builder([[1, 2, 5], [3, 0, 0]], [1, 1, 0]))
    assert satisfied(_mask_builder([[9, 9, 9]], [1, 1, 1]))


# -- keys, signatures, commitments -------------------------------------------------


def test_pk_digest_examples():
    pk = keygen("x").pk
    assert g.pk_digest_plain(pk) == g.pk_digest_plain(tuple(pk))
    assert g.pk_digest_plain(pk) != g.pk_digest_plain(pk[::-1])
    b = Builder()
    assert b.value(g.pk_digest(b, b.alloc(pk[0]), b.alloc(pk[1]))) == sponge_hash(list(pk))


def _commitment_builder(V, Pv, rho, kp, sig):
    b = Builder()
    out = g.verify_commitment(
        b, [[b.alloc(x) for x in row] for row in V], [b.alloc(x) for x in Pv], b.alloc(rho),
        b.alloc(kp.pk[0]), b.alloc(kp.pk[1]), b.alloc(sig.R), b.alloc(sig.s),
    )
    return b, out


def test_verify_commitment_examples():
    V, Pv, rho = [[1, 2], [3, 4]], [111, 222], 99
    kp = keygen("agg")
    C = g.commitment_plain(V, Pv, rho)
    b, out = _commitment_builder(V, Pv, rho, kp, sign(kp, C))
    assert satisfied(b) and b.value(out) == C
    b, _ = _commitment_builder([[1, 2], [3, 5]], Pv, rho, kp, sign(kp, C))
    assert not satisfied(b)
    other = keygen("other")
    b, _ = _commitment_builder(V, Pv, rho, kp, sign(other, C))
    assert not satisfied(b)


def test_signature_gadget_size():
    kp = keygen("s")
    sig = sign(kp, 5)
    b = Builder()
    g.signature_check(b, b.alloc(kp.pk[0]), b.alloc(g.pk_digest_plain(kp.pk)), b.alloc(5), b.alloc(sig.R), b.alloc(sig.s))
    assert satisfied(b)
    assert 1500 < b.cs.constraint_count() < 2000


@pytest.mark.parametrize("name", sorted(GADGET_TRIALS))
def test_gadget_trials_smoke(name):
    """Short run of the acceptance trial loop; the full 500-trial run is in the acceptance suite."""
    samples, agree, tried, caught = run_gadget_trials(name, 40, seed=1)
    assert agree == samples
    assert caught == tried == 40


def test_run_gadget_records_constraints():
    b = Builder()
    res = g.run_gadget(b, g.is_zero, b.alloc(5))
    assert res.values == [0] and res.constraints_added == 2
