import pytest

from settlefl.errors import Finalized, IncompleteWitness, UnknownVariable
from settlefl.gadgets import lpi
from settlefl.r1cs import Builder, ConstraintSystem, LinComb, PUBLIC


def test_alloc_indices():
    cs = ConstraintSystem()
    a = cs.alloc()
    b = cs.alloc()
    assert a == 1 and b == 2
    assert cs.visibility[0] == "one"


def test_alloc_after_seal():
    cs = ConstraintSystem().seal()
    with pytest.raises(Finalized):
        cs.alloc()


def test_tautology_always_holds():
    cs = ConstraintSystem()
    x = cs.alloc()
    cs.enforce(LinComb.var(x), 1, LinComb.var(x))
    for v in (0, 1, 99, cs.p - 1):
        assert cs.is_satisfied([1, v])[0]


def test_square_constraint():
    cs = ConstraintSystem()
    x = LinComb.var(cs.alloc())
    cs.enforce(x, x, 9)
    assert cs.is_satisfied([1, 3]) == (True, None)
    assert cs.is_satisfied([1, 4]) == (False, 0)
    # -3 squares to 9 too
    assert cs.is_satisfied([1, cs.p - 3])[0]


def test_unknown_variable():
    cs = ConstraintSystem()
    with pytest.raises(UnknownVariable):
        cs.enforce(LinComb.var(5), 1, 0)


def test_empty_system_satisfied():
    assert ConstraintSystem().is_satisfied([1]) == (True, None)
    assert ConstraintSystem().constraint_count() == 0


def test_product_constraint_reports_index():
    cs = ConstraintSystem()
    x, y, z = (LinComb.var(cs.alloc()) for _ in range(3))
    cs.enforce(x, y, z)
    assert cs.is_satisfied([1, 2, 3, 6])[0]
    assert cs.is_satisfied([1, 2, 3, 7]) == (False, 0)


def test_incomplete_witness():
    cs = ConstraintSystem()
    cs.alloc()
    with pytest.raises(IncompleteWitness):
        cs.is_satisfied([1])
    with pytest.raises(IncompleteWitness):
        cs.is_satisfied([1, None])
    with pytest.raises(IncompleteWitness):
        cs.is_satisfied([0, 0])


def test_public_indices_and_counts():
    cs = ConstraintSystem()
    cs.alloc(PUBLIC)
    cs.alloc()
    cs.alloc(PUBLIC)
    assert cs.public_indices() == [1, 3]
    assert (cs.num_public, cs.num_private, cs.num_variables) == (2, 1, 4)


def test_linear_combination_arithmetic():
    a, b = LinComb.var(1, 2), LinComb.var(2)
    lc = a + b * 3 - 4
    assert lc.evaluate([1, 5, 7], 101) == (10 + 21 - 4) % 101
    assert (-lc).evaluate([1, 5, 7], 101) == (-27) % 101
    assert (1 - a).evaluate([1, 5, 7], 101) == (1 - 10) % 101


def test_lpi_count_is_stable():
    def build():
        b = Builder()
        lpi(b, b.alloc(4), 10)
        return b.cs

    one, two = build(), build()
    assert one.constraint_count() == two.constraint_count() > 0
    assert one.structure_key() == two.structure_key()
    assert one.dump() == two.dump()


def test_structure_independent_of_values():
    def build(x):
        b = Builder()
        lpi(b, b.alloc(x), 6)
        return b.cs.structure_key()

    assert build(0) == build(3) == build(6)


def test_violated_after_change_is_local():
    b = Builder()
    x = b.alloc(3)
    y = b.mul(x, x)
    b.enforce(y, 1, 9)
    w = b.witness()
    var = next(iter(x.terms))
    assert b.cs.violated_after_change(w, var, 4)
    assert b.cs.violated_after_change(w, var, 3) == []
