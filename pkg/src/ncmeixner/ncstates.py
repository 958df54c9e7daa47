"""Linear functionals on the free algebra: moments and free cumulants.

A functional is stored as a series whose coefficient of ``z_u`` is its
value on the monomial ``x_u``.  The value on ``1`` is implicit (1 for
moments, 0 for cumulants) and never stored.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from ._linalg import certify_psd
from .ncseries import (
    EMPTY,
    NCSeries,
    SeriesTuple,
    Word,
    as_fraction,
    comp_inverse,
    compose,
    format_rational,
    mul,
    op,
    words,
)

MAX_PARTITION_SIZE = 12


class NormalizationError(ValueError):
    """A functional flagged as normalized is not centered with unit covariance."""


@dataclass(frozen=True)
class Check:
    """Outcome of a yes/no test, with a witness when the answer is no."""

    ok: bool
    witness: object = None

    def __bool__(self):
        return self.ok


def _check_normalized(s: NCSeries, what: str):
    n = s.n
    for i in range(1, n + 1):
        if s.order >= 1 and s[(i,)] != 0:
            raise NormalizationError("%s: value on x_%d is %s, expected 0" % (what, i, s[(i,)]))
        for j in range(1, n + 1):
            if s.order >= 2 and s[(i, j)] != int(i == j):
                raise NormalizationError(
                    "%s: value on x_%d x_%d is %s, expected %d" % (what, i, j, s[(i, j)], int(i == j))
                )


class _Functional:
    kind = ""

    def __init__(self, series: NCSeries, normalized: bool = False):
        if series.const:
            raise ValueError("constant term is implicit and must not be stored")
        if normalized:
            _check_normalized(series, self.kind)
        self.series = series
        self.normalized = normalized

    @property
    def n(self) -> int:
        return self.series.n

    @property
    def order(self) -> int:
        return self.series.order

    def __getitem__(self, w) -> Fraction:
        return self.series[tuple(w)]

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return self.series == other.series

    def __hash__(self):
        return hash((self.kind, self.series))

    def __repr__(self):
        return "%s(%s)" % (type(self).__name__, self.series.pretty())

    @classmethod
    def from_values(cls, n: int, order: int, values, normalized: bool = False):
        return cls(NCSeries(n, order, values), normalized)

    def with_order(self, order: int):
        """Lower the truncation order (dropping values)."""
        if order > self.order:
            raise ValueError("cannot raise truncation order of a functional")
        return type(self)(self.series.truncate(order), self.normalized)

    def to_json(self) -> dict:
        out = {"kind": self.kind, "normalized": self.normalized}
        out.update(self.series.to_json(dense=True))
        # the empty word is implicit (1 for moments, 0 for cumulants)
        out["terms"] = [t for t in out["terms"] if t["word"]]
        return out

    @classmethod
    def from_json(cls, obj):
        kind = obj.get("kind", cls.kind)
        if kind != cls.kind:
            raise ValueError("expected kind %r, got %r" % (cls.kind, kind))
        s = NCSeries.from_json(obj)
        return cls(s, bool(obj.get("normalized", False)))


class MomentFunctional(_Functional):
    """Unital functional given by its moments ``phi[x_u]`` for ``|u| >= 1``."""

    kind = "moments"

    def value(self, w) -> Fraction:
        w = tuple(w)
        return Fraction(1) if not w else self.series[w]

    def one_plus(self) -> NCSeries:
        """``1 + M(z)`` as a series."""
        return self.series + 1


class CumulantFunctional(_Functional):
    """Free cumulants ``R[x_u]`` for ``|u| >= 1``."""

    kind = "cumulants"


# --- non-crossing partitions -------------------------------------------------


def _crosses(b1, b2) -> bool:
    for a, c in itertools.combinations(b1, 2):
        for b, d in itertools.combinations(b2, 2):
            if a < b < c < d or b < a < d < c:
                return True
    return False


def is_noncrossing(blocks) -> bool:
    return not any(_crosses(x, y) for x, y in itertools.combinations(blocks, 2))


@lru_cache(maxsize=None)
def _nc(lo: int, hi: int):
    """Non-crossing partitions of ``{lo..hi}`` as tuples of sorted blocks."""
    if lo > hi:
        return ((),)
    out = []
    rest = list(range(lo + 1, hi + 1))
    # choose the other members of the block containing lo
    for r in range(len(rest) + 1):
        for others in itertools.combinations(rest, r):
            block = (lo,) + others
            bounds = list(block) + [hi + 1]
            gap_parts = [_nc(bounds[j] + 1, bounds[j + 1] - 1) for j in range(len(block))]
            for combo in itertools.product(*gap_parts):
                blocks = [block]
                for part in combo:
                    blocks.extend(part)
                out.append(tuple(sorted(blocks)))
    return tuple(out)


def nc_partitions(k: int):
    """All non-crossing partitions of ``{1..k}``, each a tuple of sorted blocks."""
    if not 1 <= k <= MAX_PARTITION_SIZE:
        raise ValueError("k must be in 1..%d, got %d" % (MAX_PARTITION_SIZE, k))
    return _nc(1, k)


def _sub(u: Word, block) -> Word:
    return tuple(u[i - 1] for i in block)


# --- moment/cumulant transforms ----------------------------------------------


def moments_from_cumulants(r: CumulantFunctional) -> MomentFunctional:
    """Sum over non-crossing partitions of products of block cumulants.

    Organized by the block containing position 1: the other positions fall
    into the gaps between its elements, each gap carrying an independent
    non-crossing partition, i.e. a moment of the gap's sub-word.
    """
    n, order = r.n, r.order
    rs = r.series
    m: dict = {EMPTY: Fraction(1)}
    for u in words(n, order, 1):
        k = len(u)
        total = Fraction(0)
        for size in range(k):
            for others in itertools.combinations(range(1, k), size):
                block = (0,) + others
                rv = rs[_sub(u, [i + 1 for i in block])]
                if not rv:
                    continue
                prod = rv
                bounds = list(block) + [k]
                for j in range(len(block)):
                    gap = u[bounds[j] + 1: bounds[j + 1]]
                    if gap:
                        prod *= m[gap]
                        if not prod:
                            break
                total += prod
        m[u] = total
    del m[EMPTY]
    normalized = r.normalized
    return MomentFunctional(NCSeries(n, order, m), normalized)


def cumulants_from_moments(m: MomentFunctional) -> CumulantFunctional:
    """Recursive subtraction over ``NC(k) \\ {1}``, one word at a time."""
    n, order = m.n, m.order
    ms = m.series
    if order > MAX_PARTITION_SIZE:
        raise ValueError("order %d exceeds partition cap %d" % (order, MAX_PARTITION_SIZE))
    r: dict = {}
    for u in words(n, order, 1):
        k = len(u)
        total = ms[u]
        for pi in nc_partitions(k):
            if len(pi) == 1:
                continue
            prod = Fraction(1)
            for b in pi:
                prod *= r.get(_sub(u, b), 0)
                if not prod:
                    break
            total -= prod
        if total:
            r[u] = total
    return CumulantFunctional(NCSeries(n, order, r), m.normalized)


def solve_cumulant_relation(m: MomentFunctional) -> CumulantFunctional:
    """Cumulants from ``R(w_1(1+M(w)), ..., w_n(1+M(w))) = M(w)``.

    The tuple ``w_i (1 + M(w))`` is inverted under composition and ``M`` is
    composed with that inverse.
    """
    n, order = m.n, m.order
    one_m = m.one_plus()
    t = SeriesTuple(mul(NCSeries.var(i, n, order), one_m) for i in range(1, n + 1))
    r = compose(m.series, comp_inverse(t))
    return CumulantFunctional(r, m.normalized)


def cumulant_tuple(m: MomentFunctional) -> SeriesTuple:
    """The substitution ``z_i = w_i (1 + M(w))``."""
    one_m = m.one_plus()
    return SeriesTuple(mul(NCSeries.var(i, m.n, m.order), one_m) for i in range(1, m.n + 1))


# --- constructions -----------------------------------------------------------


def free_product_cumulants(components: Sequence[CumulantFunctional]) -> CumulantFunctional:
    """Place one-variable cumulant sequences on separate variables; mixed ones vanish."""
    n = len(components)
    if n < 1:
        raise ValueError("need at least one component")
    order = components[0].order
    vals = {}
    for i, comp in enumerate(components, start=1):
        if comp.n != 1:
            raise ValueError("free product components must be one-variable functionals")
        if comp.order != order:
            raise ValueError("free product components disagree on order")
        for k in range(1, order + 1):
            vals[(i,) * k] = comp[(1,) * k]
    normalized = all(c.normalized for c in components)
    return CumulantFunctional(NCSeries(n, order, vals), normalized)


def free_product(components: Sequence[MomentFunctional], n: int | None = None) -> MomentFunctional:
    """Free product of one-variable moment functionals."""
    if n is not None and len(components) != n:
        raise ValueError("expected %d components, got %d" % (n, len(components)))
    r = free_product_cumulants([cumulants_from_moments(c) for c in components])
    return moments_from_cumulants(r)


def semicircular_system(means, variances, order: int) -> CumulantFunctional:
    """Free semicircular system: ``R[x_i] = b_i``, ``R[x_i^2] = c_i``, all else zero."""
    n = len(means)
    if len(variances) != n:
        raise ValueError("means and variances differ in length")
    vals = {}
    for i in range(n):
        if order >= 1:
            vals[(i + 1,)] = as_fraction(means[i])
        if order >= 2:
            vals[(i + 1, i + 1)] = as_fraction(variances[i])
    return CumulantFunctional(NCSeries(n, order, vals))


def exp_oplus(inner: Sequence[MomentFunctional]) -> CumulantFunctional:
    """``psi[x_i x_j] = delta_ij`` and ``psi[x_i x_u x_j] = delta_ij phi_i[x_u]``.

    Inner functionals are given at order ``N - 2``; the result has order ``N``.
    """
    if not inner:
        raise ValueError("need at least one inner functional")
    n = inner[0].n
    if len(inner) != n:
        raise ValueError("need one inner functional per variable (%d), got %d" % (n, len(inner)))
    inner_order = inner[0].order
    if inner_order < 0:
        raise ValueError("order underflow")
    for phi in inner:
        if phi.n != n or phi.order != inner_order:
            raise ValueError("inner functionals disagree on n or order")
    order = inner_order + 2
    vals = {}
    for i, phi in enumerate(inner, start=1):
        vals[(i, i)] = 1
        for u in phi.series:
            vals[(i,) + u + (i,)] = phi.series[u]
    return CumulantFunctional(NCSeries(n, order, vals), normalized=True)


def scale_cumulants(r: CumulantFunctional, t) -> CumulantFunctional:
    """Cumulants of the convolution power: ``R -> t R``."""
    t = as_fraction(t)
    if t <= 0:
        raise ValueError("t must be positive, got %s" % t)
    out = r.series.scale(t)
    return CumulantFunctional(out, r.normalized and t == 1)


# --- traciality --------------------------------------------------------------


def _cyclic_check(s: NCSeries) -> Check:
    # a violation has at least one nonzero side, so scanning the support suffices
    for w in s.support():
        for k in range(1, len(w)):
            u, v = w[:k], w[k:]
            if s[v + u] != s[w]:
                return Check(False, (u, v))
    return Check(True)


def is_tracial(m: MomentFunctional) -> Check:
    """``phi[x_u x_v] == phi[x_v x_u]`` for all ``|u| + |v| <= order``.

    The witness is the pair ``(u, v)``.
    """
    return _cyclic_check(m.series)


def cyclic_cumulant_check(m: MomentFunctional) -> Check:
    """Rotation invariance of the free cumulants of ``m``."""
    return _cyclic_check(cumulants_from_moments(m).series)


# --- positivity --------------------------------------------------------------


@dataclass
class PositivityReport:
    is_positive: bool
    is_faithful: bool
    basis: list
    pivots: list = field(default_factory=list)
    witness: list | None = None
    witness_value: Fraction | None = None

    def __bool__(self):
        return self.is_positive

    def to_json(self) -> dict:
        return {
            "is_positive": self.is_positive,
            "is_faithful": self.is_faithful,
            "basis": [list(w) for w in self.basis],
            "pivots": [{"word": list(self.basis[k]), "value": format_rational(v)} for k, v in self.pivots],
            "witness": None
            if self.witness is None
            else [{"word": list(w), "coeff": format_rational(c)} for w, c in zip(self.basis, self.witness) if c],
            "witness_value": None if self.witness_value is None else format_rational(self.witness_value),
        }


def _gram(value, basis):
    return [[value(op(u) + v) for v in basis] for u in basis]


def gram_matrix(m: MomentFunctional, d: int):
    """Matrix of ``phi[x_u^* x_v]`` over words of length ``<= d`` (graded-lex)."""
    if 2 * d > m.order:
        raise ValueError("degree %d needs order >= %d, have %d" % (d, 2 * d, m.order))
    return _gram(m.value, list(words(m.n, d)))


def _report(g, basis) -> PositivityReport:
    cert = certify_psd(g)
    return PositivityReport(cert.is_psd, cert.is_pd, basis, cert.pivots, cert.witness, cert.witness_value)


def check_positive(m: MomentFunctional, d: int) -> PositivityReport:
    """Exact PSD certification of the degree-``d`` Gram matrix."""
    basis = list(words(m.n, d))
    return _report(gram_matrix(m, d), basis)


def check_conditionally_positive(r: CumulantFunctional, d: int) -> PositivityReport:
    """PSD certification of ``psi[x_u^* x_v]`` for ``1 <= |u|, |v| <= d``."""
    if 2 * d > r.order:
        raise ValueError("degree %d needs order >= %d, have %d" % (d, 2 * d, r.order))
    basis = list(words(r.n, d, 1))
    return _report(_gram(r.series.__getitem__, basis), basis)


def functional_from_json(obj):
    kind = obj.get("kind")
    if kind == "moments":
        return MomentFunctional.from_json(obj)
    if kind == "cumulants":
        return CumulantFunctional.from_json(obj)
    raise ValueError("unknown functional kind %r" % kind)


__all__ = [
    "Check",
    "CumulantFunctional",
    "MomentFunctional",
    "NormalizationError",
    "PositivityReport",
    "check_conditionally_positive",
    "check_positive",
    "cumulant_tuple",
    "cumulants_from_moments",
    "cyclic_cumulant_check",
    "exp_oplus",
    "free_product",
    "free_product_cumulants",
    "functional_from_json",
    "gram_matrix",
    "is_noncrossing",
    "is_tracial",
    "moments_from_cumulants",
    "nc_partitions",
    "scale_cumulants",
    "semicircular_system",
    "solve_cumulant_relation",
]
