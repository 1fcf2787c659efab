"""Rank-1 constraint systems: <a, w> * <b, w> = <c, w> over F_p."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import Finalized, IncompleteWitness, UnknownVariable
from .field import BN254_R

ONE = "one"
PUBLIC = "public"
PRIVATE = "private"


class LinComb:
    """Sparse linear combination {var_index: coeff}. Var 0 is the constant 1."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[int, int] | None = None):
        self.terms = terms if terms is not None else {}

    @classmethod
    def var(cls, index: int, coeff: int = 1) -> "LinComb":
        return cls({index: coeff})

    @classmethod
    def const(cls, k: int) -> "LinComb":
        return cls({0: k}) if k else cls()

    @classmethod
    def from_terms(cls, pairs: Iterable[tuple[int, int]]) -> "LinComb":
        """Build from (coeff, var) pairs; duplicate vars have coefficients summed."""
        out: dict[int, int] = {}
        for coeff, v in pairs:
            out[v] = out.get(v, 0) + coeff
        return cls(out)

    def __add__(self, other) -> "LinComb":
        if isinstance(other, int):
            other = LinComb.const(other)
        out = dict(self.terms)
        for v, c in other.terms.items():
            out[v] = out.get(v, 0) + c
        return LinComb(out)

    __radd__ = __add__

    def __neg__(self) -> "LinComb":
        return LinComb({v: -c for v, c in self.terms.items()})

    def __sub__(self, other) -> "LinComb":
        if isinstance(other, int):
            other = LinComb.const(other)
        return self + (-other)

    def __rsub__(self, other) -> "LinComb":
        return (-self) + other

    def __mul__(self, k: int) -> "LinComb":
        if not isinstance(k, int):
            return NotImplemented
        return LinComb({v: c * k for v, c in self.terms.items()})

    __rmul__ = __mul__

    def evaluate(self, w: Sequence[int], p: int) -> int:
        return sum(c * w[v] for v, c in self.terms.items()) % p

    def variables(self) -> Iterable[int]:
        return self.terms.keys()

    def __repr__(self):
        return f"LinComb({self.terms})"


def as_lc(x) -> LinComb:
    if isinstance(x, LinComb):
        return x
    if isinstance(x, int):
        return LinComb.const(x)
    raise TypeError(f"cannot coerce {type(x).__name__} to LinComb")


@dataclass(frozen=True)
class Constraint:
    a: LinComb
    b: LinComb
    c: LinComb


class ConstraintSystem:
    def __init__(self, p: int = BN254_R):
        self.p = p
        self.visibility: list[str] = [ONE]
        self.constraints: list[Constraint] = []
        self.sealed = False
        self._index: dict[int, list[int]] | None = None

    # -- construction ------------------------------------------------------
    def alloc(self, visibility: str = PRIVATE) -> int:
        if self.sealed:
            raise Finalized("constraint system is sealed")
        if visibility not in (PUBLIC, PRIVATE):
            raise ValueError(f"bad visibility {visibility!r}")
        self.visibility.append(visibility)
        return len(self.visibility) - 1

    def enforce(self, a, b, c) -> None:
        if self.sealed:
            raise Finalized("constraint system is sealed")
        a, b, c = as_lc(a), as_lc(b), as_lc(c)
        n = len(self.visibility)
        for lc in (a, b, c):
            if lc.terms and (min(lc.terms) < 0 or max(lc.terms) >= n):
                bad = [v for v in lc.terms if not 0 <= v < n]
                raise UnknownVariable(bad[0])
        self.constraints.append(Constraint(a, b, c))
        self._index = None

    def seal(self) -> "ConstraintSystem":
        self.sealed = True
        return self

    # -- queries -----------------------------------------------------------
    @property
    def num_variables(self) -> int:
        return len(self.visibility)

    @property
    def num_public(self) -> int:
        return sum(1 for v in self.visibility if v == PUBLIC)

    @property
    def num_private(self) -> int:
        return sum(1 for v in self.visibility if v == PRIVATE)

    def public_indices(self) -> list[int]:
        return [i for i, v in enumerate(self.visibility) if v == PUBLIC]

    def constraint_count(self) -> int:
        return len(self.constraints)

    def _check_witness(self, w: Sequence[int]) -> None:
        if len(w) < self.num_variables:
            raise IncompleteWitness(
                f"witness has {len(w)} values, system has {self.num_variables} variables"
            )
        if any(x is None for x in w[: self.num_variables]):
            raise IncompleteWitness("witness has unassigned variables")
        if w[0] % self.p != 1:
            raise IncompleteWitness("constant-one variable must be assigned 1")

    def is_satisfied(self, w: Sequence[int]) -> tuple[bool, int | None]:
        """Return (ok, index of first violated constraint or None)."""
        self._check_witness(w)
        p = self.p

        def ev(terms):
            acc = 0
            for v, c in terms.items():
                acc += c * w[v]
            return acc

        for i, con in enumerate(self.constraints):
            if (ev(con.a.terms) * ev(con.b.terms) - ev(con.c.terms)) % p:
                return False, i
        return True, None

    def constraints_touching(self, var: int) -> list[int]:
        if self._index is None:
            idx: dict[int, list[int]] = {}
            for i, con in enumerate(self.constraints):
                seen = set(con.a.terms) | set(con.b.terms) | set(con.c.terms)
                for v in seen:
                    idx.setdefault(v, []).append(i)
            self._index = idx
        return self._index.get(var, [])

    def violated_after_change(self, w: Sequence[int], var: int, new_value: int) -> list[int]:
        """Indices of constraints violated once ``var`` is set to ``new_value``.

        Only constraints mentioning ``var`` are re-evaluated; every other
        constraint keeps its (assumed satisfied) value.
        """
        p = self.p
        w2 = list(w)
        w2[var] = new_value % p
        bad = []
        for i in self.constraints_touching(var):
            con = self.constraints[i]
            if con.a.evaluate(w2, p) * con.b.evaluate(w2, p) % p != con.c.evaluate(w2, p):
                bad.append(i)
        return bad

    def dump(self) -> str:
        """One constraint per line: a ; b ; c with ``coeff*vIDX`` terms."""

        def fmt(lc: LinComb) -> str:
            items = sorted((v, c % self.p) for v, c in lc.terms.items() if c % self.p)
            return " + ".join(f"{c}*v{v}" for v, c in items) or "0"

        return "".join(
            f"{fmt(c.a)} ; {fmt(c.b)} ; {fmt(c.c)}\n" for c in self.constraints
        )

    def structure_key(self) -> tuple:
        """Hashable canonical form for determinism comparisons."""

        def key(lc: LinComb):
            return tuple(sorted((v, c % self.p) for v, c in lc.terms.items() if c % self.p))

        return (
            tuple(self.visibility),
            tuple((key(c.a), key(c.b), key(c.c)) for c in self.constraints),
        )


class Builder:
    """A constraint system under construction together with its witness.

    Gadgets allocate through the builder, which assigns every new variable
    immediately; the constraint structure never depends on the values.
    """

    def __init__(self, p: int = BN254_R):
        self.cs = ConstraintSystem(p)
        self.values: list[int] = [1]
        self.hints: set[int] = set()

    @property
    def p(self) -> int:
        return self.cs.p

    def alloc(self, value: int, public: bool = False) -> LinComb:
        v = self.cs.alloc(PUBLIC if public else PRIVATE)
        self.values.append(value % self.p)
        return LinComb.var(v)

    def alloc_index(self, value: int, public: bool = False) -> int:
        v = self.cs.alloc(PUBLIC if public else PRIVATE)
        self.values.append(value % self.p)
        return v

    def enforce(self, a, b, c) -> None:
        self.cs.enforce(a, b, c)

    def value(self, lc) -> int:
        return as_lc(lc).evaluate(self.values, self.p)

    def mul(self, a, b, public: bool = False) -> LinComb:
        out = self.alloc(self.value(a) * self.value(b), public)
        self.enforce(a, b, out)
        return out

    def mul_known(self, a, b, value: int) -> LinComb:
        """Like :meth:`mul` when the caller already knows the product."""
        out = self.alloc(value)
        self.enforce(a, b, out)
        return out

    def equal(self, a, b) -> None:
        """Enforce a == b."""
        self.enforce(a, 1, b)

    def boolean(self, x) -> None:
        self.enforce(x, as_lc(x) - 1, 0)

    def witness(self) -> list[int]:
        return list(self.values)
