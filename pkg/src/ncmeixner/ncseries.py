"""Truncated formal power series in non-commuting variables.

Words are tuples of variable indices in ``1..n``; the empty tuple is the
unit monomial.  Coefficients are :class:`fractions.Fraction`, so every
operation is exact.  A series carries its own truncation order and binary
operations insist that orders agree.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

Word = tuple  # tuple[int, ...]

EMPTY: Word = ()


class DimensionError(ValueError):
    """Operands disagree on variable count or truncation order."""


class NotInvertibleError(ArithmeticError):
    pass


class SubstitutionError(ValueError):
    pass


def op(w: Word) -> Word:
    """Reverse a word (the involution on multi-indices)."""
    return tuple(reversed(w))


def grlex_key(w: Word):
    return (len(w), w)


def words(n: int, max_len: int, min_len: int = 0) -> Iterator[Word]:
    """All words over ``1..n`` with ``min_len <= len <= max_len``, graded-lex."""
    letters = range(1, n + 1)
    for k in range(min_len, max_len + 1):
        yield from itertools.product(letters, repeat=k)


def count_words(n: int, max_len: int) -> int:
    return sum(n**k for k in range(max_len + 1))


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise TypeError("floats are not accepted as exact coefficients: %r" % x)
    return Fraction(x)


def format_rational(q: Fraction) -> str:
    return str(q)


def parse_rational(s) -> Fraction:
    if isinstance(s, bool):
        raise ValueError("not a rational: %r" % s)
    if isinstance(s, int):
        return Fraction(s)
    if not isinstance(s, str):
        raise ValueError("rationals must be strings 'p/q' or integers, got %r" % (s,))
    try:
        q = Fraction(s.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError("not a rational: %r" % s) from exc
    if "." in s or "e" in s.lower():
        raise ValueError("decimal notation not accepted, use 'p/q': %r" % s)
    return q


class NCSeries:
    """Element of the free algebra in ``z_1..z_n`` truncated above degree ``order``.

    Instances are immutable; zero coefficients are never stored.
    """

    __slots__ = ("n", "order", "_c", "_hash")

    def __init__(self, n: int, order: int, coeffs: Mapping[Word, object] | None = None):
        if n < 1:
            raise DimensionError("need at least one variable, got n=%d" % n)
        if order < 0:
            raise DimensionError("negative truncation order %d" % order)
        c = {}
        for w, v in (coeffs or {}).items():
            w = tuple(w)
            if len(w) > order:
                continue
            for letter in w:
                if not 1 <= letter <= n:
                    raise DimensionError("letter %r outside 1..%d" % (letter, n))
            v = as_fraction(v)
            if v:
                c[w] = v
        self.n = n
        self.order = order
        self._c = c
        self._hash = None

    @classmethod
    def _raw(cls, n: int, order: int, c: dict) -> "NCSeries":
        # trusted constructor: c already clean
        s = object.__new__(cls)
        s.n, s.order, s._c, s._hash = n, order, c, None
        return s

    # constructors -----------------------------------------------------
    @classmethod
    def zero(cls, n: int, order: int) -> "NCSeries":
        return cls(n, order)

    @classmethod
    def one(cls, n: int, order: int) -> "NCSeries":
        return cls(n, order, {EMPTY: 1})

    @classmethod
    def constant(cls, n: int, order: int, value) -> "NCSeries":
        return cls(n, order, {EMPTY: value})

    @classmethod
    def var(cls, i: int, n: int, order: int) -> "NCSeries":
        return cls(n, order, {(i,): 1})

    @classmethod
    def monomial(cls, w: Sequence[int], n: int, order: int, coeff=1) -> "NCSeries":
        return cls(n, order, {tuple(w): coeff})

    # access -----------------------------------------------------------
    def __getitem__(self, w) -> Fraction:
        return self._c.get(tuple(w), Fraction(0))

    def coeff(self, w) -> Fraction:
        return self[w]

    def items(self):
        """(word, coeff) pairs in graded-lex order."""
        return sorted(self._c.items(), key=lambda kv: grlex_key(kv[0]))

    def support(self):
        return sorted(self._c, key=grlex_key)

    def __iter__(self):
        return iter(self.support())

    def __len__(self):
        return len(self._c)

    @property
    def const(self) -> Fraction:
        return self._c.get(EMPTY, Fraction(0))

    def degree_part(self, k: int) -> "NCSeries":
        return NCSeries._raw(self.n, self.order, {w: v for w, v in self._c.items() if len(w) == k})

    def valuation(self) -> int | None:
        """Lowest degree present, or None for the zero series."""
        return min((len(w) for w in self._c), default=None)

    def max_degree(self) -> int:
        return max((len(w) for w in self._c), default=0)

    def is_zero(self) -> bool:
        return not self._c

    def truncate(self, order: int) -> "NCSeries":
        """Explicit change of truncation order.

        Lowering drops terms.  Raising treats the series as a polynomial
        (missing higher terms read as zero), which is only meaningful when
        the caller knows the series is a polynomial.
        """
        if order < 0:
            raise DimensionError("negative truncation order %d" % order)
        return NCSeries._raw(self.n, order, {w: v for w, v in self._c.items() if len(w) <= order})

    # arithmetic -------------------------------------------------------
    def _check(self, other: "NCSeries"):
        if not isinstance(other, NCSeries):
            raise TypeError("expected NCSeries, got %s" % type(other).__name__)
        if other.n != self.n or other.order != self.order:
            raise DimensionError(
                "mismatched series: (n=%d, order=%d) vs (n=%d, order=%d)"
                % (self.n, self.order, other.n, other.order)
            )

    def _coerce(self, other):
        if isinstance(other, NCSeries):
            self._check(other)
            return other
        return NCSeries.constant(self.n, self.order, as_fraction(other))

    def __add__(self, other):
        other = self._coerce(other)
        c = dict(self._c)
        for w, v in other._c.items():
            s = c.get(w, 0) + v
            if s:
                c[w] = s
            else:
                c.pop(w, None)
        return NCSeries._raw(self.n, self.order, c)

    __radd__ = __add__

    def __neg__(self):
        return NCSeries._raw(self.n, self.order, {w: -v for w, v in self._c.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def scale(self, t) -> "NCSeries":
        t = as_fraction(t)
        if not t:
            return NCSeries._raw(self.n, self.order, {})
        return NCSeries._raw(self.n, self.order, {w: t * v for w, v in self._c.items()})

    def __mul__(self, other):
        if isinstance(other, NCSeries):
            return mul(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __eq__(self, other):
        if not isinstance(other, NCSeries):
            return NotImplemented
        return self.n == other.n and self.order == other.order and self._c == other._c

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.n, self.order, frozenset(self._c.items())))
        return self._hash

    def __repr__(self):
        return "NCSeries(n=%d, order=%d, %s)" % (self.n, self.order, self.pretty())

    def pretty(self, var: str = "z") -> str:
        if not self._c:
            return "0"
        out = []
        for w, v in self.items():
            mono = "*".join("%s%d" % (var, i) for i in w)
            if not w:
                out.append(str(v))
            elif v == 1:
                out.append(mono)
            elif v == -1:
                out.append("-" + mono)
            else:
                out.append("%s*%s" % (v, mono))
        return " + ".join(out).replace("+ -", "- ")

    # serialization ----------------------------------------------------
    def to_json(self, dense: bool = False) -> dict:
        """``{"n", "order", "terms": [{"word", "coeff"}]}`` in graded-lex order.

        With ``dense`` every word up to ``order`` is listed, zeros included.
        """
        if dense:
            pairs = ((w, self[w]) for w in words(self.n, self.order))
        else:
            pairs = self.items()
        return {
            "n": self.n,
            "order": self.order,
            "terms": [{"word": list(w), "coeff": format_rational(v)} for w, v in pairs],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "NCSeries":
        n, order = int(obj["n"]), int(obj["order"])
        c = {}
        for t in obj.get("terms", []):
            w = tuple(int(i) for i in t["word"])
            if len(w) > order:
                raise DimensionError("term %r exceeds order %d" % (list(w), order))
            if w in c:
                raise ValueError("duplicate word %r" % (list(w),))
            c[w] = parse_rational(t["coeff"])
        return cls(n, order, c)


def mul(a: NCSeries, b: NCSeries) -> NCSeries:
    """Truncated product in the free algebra."""
    a._check(b)
    order = a.order
    by_len: dict[int, list] = {}
    for w, v in b._c.items():
        by_len.setdefault(len(w), []).append((w, v))
    c: dict = {}
    for w1, v1 in a._c.items():
        room = order - len(w1)
        for k in range(room + 1):
            for w2, v2 in by_len.get(k, ()):
                w = w1 + w2
                c[w] = c.get(w, 0) + v1 * v2
    return NCSeries._raw(a.n, order, {w: v for w, v in c.items() if v})


def mul_inverse(a: NCSeries) -> NCSeries:
    """Two-sided multiplicative inverse, solved degree by degree."""
    a0 = a.const
    if not a0:
        raise NotInvertibleError("constant term is zero")
    inv0 = 1 / a0
    # a = a0 (1 - h), so a^{-1} = (1 + h + h^2 + ...) / a0 with h of valuation >= 1
    h = NCSeries._raw(a.n, a.order, {w: -v * inv0 for w, v in a._c.items() if w})
    result = NCSeries.one(a.n, a.order)
    power = result
    for _ in range(a.order):
        power = mul(power, h)
        if power.is_zero():
            break
        result = result + power
    return result.scale(inv0)


class SeriesTuple:
    """An n-tuple of series without constant terms (a substitution map)."""

    __slots__ = ("components",)

    def __init__(self, components: Iterable[NCSeries]):
        comps = tuple(components)
        if not comps:
            raise DimensionError("empty tuple")
        n, order = comps[0].n, comps[0].order
        for c in comps:
            if c.n != n or c.order != order:
                raise DimensionError("tuple components disagree on n or order")
            if c.const:
                raise SubstitutionError("tuple component has nonzero constant term")
        if len(comps) != n:
            raise DimensionError("tuple has %d components for n=%d" % (len(comps), n))
        self.components = comps

    @classmethod
    def identity(cls, n: int, order: int) -> "SeriesTuple":
        return cls(NCSeries.var(i, n, order) for i in range(1, n + 1))

    @classmethod
    def linear(cls, matrix: Sequence[Sequence], order: int) -> "SeriesTuple":
        """Component i is ``sum_j matrix[i][j] z_j``."""
        n = len(matrix)
        return cls(
            NCSeries(n, order, {(j + 1,): matrix[i][j] for j in range(n)}) for i in range(n)
        )

    @property
    def n(self) -> int:
        return self.components[0].n

    @property
    def order(self) -> int:
        return self.components[0].order

    def __getitem__(self, i: int) -> NCSeries:
        """1-based component access, matching variable labels."""
        if not 1 <= i <= self.n:
            raise IndexError(i)
        return self.components[i - 1]

    def __iter__(self):
        return iter(self.components)

    def __len__(self):
        return len(self.components)

    def __eq__(self, other):
        if not isinstance(other, SeriesTuple):
            return NotImplemented
        return self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def __repr__(self):
        return "SeriesTuple(%s)" % ", ".join(c.pretty() for c in self.components)

    def truncate(self, order: int) -> "SeriesTuple":
        return SeriesTuple(c.truncate(order) for c in self.components)

    def is_unit_lower_triangular(self) -> bool:
        for i, c in enumerate(self.components, start=1):
            if c.degree_part(1) != NCSeries.var(i, self.n, self.order).degree_part(1):
                return False
        return True

    def then(self, other: "SeriesTuple") -> "SeriesTuple":
        """Componentwise ``compose(self_i, other)``."""
        return SeriesTuple(compose(c, other) for c in self.components)

    def to_json(self) -> dict:
        return {"n": self.n, "order": self.order, "components": [c.to_json() for c in self]}


def compose(a: NCSeries, v: SeriesTuple) -> NCSeries:
    """Substitute ``z_i <- v_i`` in ``a``, keeping letter order."""
    if not isinstance(v, SeriesTuple):
        v = SeriesTuple(v)
    if v.n != a.n:
        raise DimensionError("substitution for %d variables applied to n=%d" % (v.n, a.n))
    if v.order != a.order:
        raise DimensionError("substitution order %d vs series order %d" % (v.order, a.order))
    order = a.order
    # products v_{u(1)} ... v_{u(k)} shared along common prefixes
    cache: dict = {EMPTY: NCSeries.one(a.n, order)}

    def prefix_product(u):
        p = cache.get(u)
        if p is None:
            p = mul(prefix_product(u[:-1]), v[u[-1]])
            cache[u] = p
        return p

    acc: dict = {}
    for u, coeff in sorted(a._c.items(), key=lambda kv: grlex_key(kv[0])):
        for w, x in prefix_product(u)._c.items():
            acc[w] = acc.get(w, 0) + coeff * x
    return NCSeries._raw(a.n, order, {w: x for w, x in acc.items() if x})


def comp_inverse(u: SeriesTuple) -> SeriesTuple:
    """Compositional inverse of a tuple ``u_i = z_i + higher order``.

    Writing ``u = z + h``, the inverse ``w`` satisfies ``w = z - h(w)``; the
    degree-k part of ``h(w)`` only involves parts of ``w`` below degree k, so
    ``order`` passes fix one degree each.
    """
    if not u.is_unit_lower_triangular():
        raise NotInvertibleError("linear part of the tuple is not the identity")
    n, order = u.n, u.order
    ident = SeriesTuple.identity(n, order)
    higher = [c - ident[i] for i, c in enumerate(u.components, start=1)]
    w = ident
    for k in range(2, order + 1):
        wk = w.truncate(k)
        new = []
        for i in range(n):
            hk = compose(higher[i].truncate(k), wk).degree_part(k).truncate(order)
            new.append(w.components[i] - hk)
        w = SeriesTuple(new)
    return w


def left_derive(i: int, a: NCSeries) -> NCSeries:
    """Left partial derivative ``D_i``: strips a leading ``z_i``.

    The result is reliable only through degree ``order - 1`` and is returned
    with that truncation order.
    """
    if not 1 <= i <= a.n:
        raise IndexError("variable index %d outside 1..%d" % (i, a.n))
    new_order = max(a.order - 1, 0)
    return NCSeries._raw(
        a.n, new_order, {w[1:]: v for w, v in a._c.items() if w and w[0] == i and len(w) - 1 <= new_order}
    )


def gradient(a: NCSeries) -> SeriesTuple:
    """``(D_1 a, ..., D_n a)``; needs ``a`` free of constant and linear parts off the identity."""
    return SeriesTuple(left_derive(i, a) for i in range(1, a.n + 1))


def star(a: NCSeries) -> NCSeries:
    """The involution: reverses every word."""
    return NCSeries._raw(a.n, a.order, {op(w): v for w, v in a._c.items()})
