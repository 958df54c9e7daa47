"""Monic orthogonalization and the Favard-type recursion.

Polynomials in ``x_1..x_n`` reuse :class:`NCSeries` as a container; a
family of maximal degree ``d`` stores each ``P_u`` as a series of order
``d`` (the polynomials are exact, nothing is truncated away).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from ._linalg import SingularMatrixError, solve
from .ncseries import EMPTY, NCSeries, Word, format_rational, grlex_key, op, parse_rational, words
from .ncstates import Check, MomentFunctional


class NonFaithfulError(ArithmeticError):
    """Projection system is singular: the state is not faithful at this degree."""

    def __init__(self, degree, msg=None):
        self.degree = degree
        super().__init__(msg or "singular Gram block at degree %d (state not faithful)" % degree)


class RecursionExtractionError(ValueError):
    pass


class InconsistencyError(ArithmeticError):
    pass


class FavardError(ValueError):
    def __init__(self, report):
        self.report = report
        super().__init__("Favard conditions fail: %s" % report.describe())


def inner(m: MomentFunctional, s: NCSeries, t: NCSeries) -> Fraction:
    """``<S, T> = phi[S^* T]``."""
    total = Fraction(0)
    for a, x in s.items():
        ra = op(a)
        for b, y in t.items():
            total += x * y * m.value(ra + b)
    return total


def x_times(i: int, p: NCSeries) -> NCSeries:
    """Left multiplication by ``x_i`` of a polynomial; raises the order by one."""
    return NCSeries(p.n, p.order + 1, {(i,) + w: v for w, v in p.items()})


class PolyFamily:
    """Monic family ``{P_u : 1 <= |u| <= max_degree}``, ``P_() = 1`` implicit."""

    def __init__(self, n: int, max_degree: int, polys: Mapping[Word, NCSeries], check: bool = True):
        self.n = n
        self.max_degree = max_degree
        ps = {}
        for u, p in polys.items():
            u = tuple(u)
            if not u:
                continue
            ps[u] = p.truncate(max_degree) if p.order != max_degree else p
        self.polys = ps
        if check:
            self.check_monic()

    def __getitem__(self, u) -> NCSeries:
        u = tuple(u)
        if not u:
            return NCSeries.one(self.n, self.max_degree)
        return self.polys[u]

    def indices(self, max_len=None, min_len=0):
        top = self.max_degree if max_len is None else max_len
        return list(words(self.n, top, min_len))

    def check_monic(self):
        for u in words(self.n, self.max_degree, 1):
            if u not in self.polys:
                raise ValueError("family is missing P_%s" % (u,))
            p = self.polys[u]
            if p.max_degree() > len(u):
                raise ValueError("P_%s has degree above %d" % (u, len(u)))
            top = p.degree_part(len(u))
            if top != NCSeries.monomial(u, self.n, self.max_degree):
                raise ValueError("P_%s is not monic: leading part %s" % (u, top.pretty("x")))

    def __eq__(self, other):
        if not isinstance(other, PolyFamily):
            return NotImplemented
        return self.n == other.n and self.max_degree == other.max_degree and self.polys == other.polys

    def truncate(self, max_degree: int) -> "PolyFamily":
        if max_degree > self.max_degree:
            raise ValueError("cannot extend a family")
        return PolyFamily(
            self.n,
            max_degree,
            {u: p.truncate(max_degree) for u, p in self.polys.items() if len(u) <= max_degree},
            check=False,
        )

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "max_degree": self.max_degree,
            "polys": [
                {"index": list(u), "terms": self.polys[u].to_json()["terms"]}
                for u in words(self.n, self.max_degree, 1)
            ],
        }

    @classmethod
    def from_json(cls, obj) -> "PolyFamily":
        n, d = int(obj["n"]), int(obj["max_degree"])
        polys = {}
        for entry in obj["polys"]:
            u = tuple(int(i) for i in entry["index"])
            polys[u] = NCSeries.from_json({"n": n, "order": d, "terms": entry["terms"]})
        return cls(n, d, polys)


# --- Gram-Schmidt ------------------------------------------------------------


def _block_gram(m, family_polys, basis, degree):
    g = [[inner(m, family_polys[a], family_polys[b]) for b in basis] for a in basis]
    # a singular block means the projection onto this degree is not unique
    try:
        solve(g, [0] * len(basis))
    except SingularMatrixError:
        raise NonFaithfulError(degree) from None
    return g


def gram_schmidt_monic(m: MomentFunctional, d: int) -> PolyFamily:
    """The unique monic pseudo-orthogonal family up to degree ``d``.

    ``P_u`` is ``x_u`` minus its projection on all polynomials of lower
    degree; lower degrees are mutually orthogonal by construction, so each
    projection splits into one exact solve per degree block.  Moments up to
    order ``2d - 1`` suffice.
    """
    if 2 * d - 1 > m.order:
        raise ValueError("degree %d needs moments to order %d, have %d" % (d, 2 * d - 1, m.order))
    n = m.n
    polys = {EMPTY: NCSeries.one(n, d)}
    grams = {}
    for k in range(1, d + 1):
        for j in range(k):
            if j not in grams:
                basis = list(words(n, j, j))
                grams[j] = (basis, _block_gram(m, polys, basis, j))
        new = {}
        for u in words(n, k, k):
            xu = NCSeries.monomial(u, n, d)
            p = xu
            for j in range(k):
                basis, g = grams[j]
                rhs = [inner(m, polys[w], xu) for w in basis]
                if not any(rhs):
                    continue
                try:
                    coef = solve(g, rhs)
                except SingularMatrixError:
                    raise NonFaithfulError(j) from None
                for w, c in zip(basis, coef):
                    if c:
                        p = p - polys[w].scale(c)
            new[u] = p
        polys.update(new)
    return PolyFamily(n, d, polys)


def is_orthogonal(f: PolyFamily, m: MomentFunctional) -> Check:
    """``<P_u, P_v> = 0`` for every ``u != v`` the moments can see.

    The witness is the first offending pair ``(u, v)`` in graded-lex order.
    """
    idx = f.indices()
    for a, u in enumerate(idx):
        for v in idx[a + 1:]:
            if len(u) + len(v) > m.order:
                continue
            val = inner(m, f[u], f[v])
            if val:
                return Check(False, (u, v))
    return Check(True)


def is_pseudo_orthogonal(f: PolyFamily, m: MomentFunctional) -> Check:
    idx = f.indices()
    for a, u in enumerate(idx):
        for v in idx[a + 1:]:
            if len(u) == len(v) or len(u) + len(v) > m.order:
                continue
            if inner(m, f[u], f[v]):
                return Check(False, (u, v))
    return Check(True)


# --- recursion data ----------------------------------------------------------


@dataclass
class RecursionData:
    """Coefficients of ``x_i P_u = P_(i,u) + sum_w B[i,w,u] P_w + sum_v C[i,v,u] P_v``.

    Covers ``|u| <= max_degree - 1``.  Keys are ``(i, w, u)`` with words as
    tuples; zero entries are not stored.
    """

    n: int
    max_degree: int
    B: dict = field(default_factory=dict)
    C: dict = field(default_factory=dict)

    def __post_init__(self):
        self.B = {k: Fraction(v) for k, v in self.B.items() if v}
        self.C = {k: Fraction(v) for k, v in self.C.items() if v}
        for (i, w, u) in self.B:
            if not 1 <= i <= self.n or len(w) != len(u) or len(u) > self.max_degree - 1:
                raise ValueError("bad B index %r" % ((i, w, u),))
        for (i, v, u) in self.C:
            if not 1 <= i <= self.n or len(v) != len(u) - 1 or len(u) > self.max_degree - 1:
                raise ValueError("bad C index %r" % ((i, v, u),))

    def b(self, i, w, u) -> Fraction:
        return self.B.get((i, tuple(w), tuple(u)), Fraction(0))

    def c(self, i, v, u) -> Fraction:
        return self.C.get((i, tuple(v), tuple(u)), Fraction(0))

    def chain(self, u) -> Fraction:
        """``prod_j C[u(j), u_{j+1}, u_j]`` with ``u_j`` the suffix from position j."""
        u = tuple(u)
        out = Fraction(1)
        for j in range(len(u)):
            out *= self.c(u[j], u[j + 1:], u[j:])
        return out

    def to_json(self) -> dict:
        def rows(table):
            keys = sorted(table, key=lambda k: (k[0], grlex_key(k[2]), grlex_key(k[1])))
            return [
                {"i": i, "left_word": list(w), "right_word": list(u), "coeff": format_rational(table[(i, w, u)])}
                for (i, w, u) in keys
            ]

        return {"n": self.n, "max_degree": self.max_degree, "B": rows(self.B), "C": rows(self.C)}

    @classmethod
    def from_json(cls, obj) -> "RecursionData":
        def table(rows):
            return {
                (int(r["i"]), tuple(r["left_word"]), tuple(r["right_word"])): parse_rational(r["coeff"]) for r in rows
            }

        return cls(int(obj["n"]), int(obj["max_degree"]), table(obj.get("B", [])), table(obj.get("C", [])))


def extract_recursion(f: PolyFamily, m: MomentFunctional) -> RecursionData:
    """Expand ``x_i P_u`` in the family by inner products, one degree block at a time.

    Blocks of degree ``<= |u| - 2`` must vanish; the expansion is then
    checked to reproduce ``x_i P_u`` exactly.
    """
    n, d = f.n, f.max_degree
    if 2 * d - 1 > m.order:
        raise ValueError("family degree %d needs moments to order %d" % (d, 2 * d - 1))
    grams = {}
    for j in range(d):
        basis = list(words(n, j, j))
        grams[j] = (basis, _block_gram(m, f, basis, j))
    B, C = {}, {}
    for u in words(n, d - 1):
        k = len(u)
        for i in range(1, n + 1):
            xp = x_times(i, f[u].truncate(d)).truncate(d)
            rest = xp - f[(i,) + u]
            recon = f[(i,) + u]
            for j in range(k + 1):
                basis, g = grams[j]
                rhs = [inner(m, f[w], rest) for w in basis]
                if not any(rhs):
                    continue
                try:
                    coef = solve(g, rhs)
                except SingularMatrixError:
                    raise NonFaithfulError(j) from None
                for w, cval in zip(basis, coef):
                    if not cval:
                        continue
                    if j < k - 1:
                        raise RecursionExtractionError(
                            "x_%d P_%s has a component on P_%s of degree %d: family not pseudo-orthogonal"
                            % (i, u, w, j)
                        )
                    (B if j == k else C)[(i, w, u)] = cval
                    recon = recon + f[w].scale(cval)
            if recon != xp:
                raise RecursionExtractionError(
                    "x_%d P_%s is not in the span of the family up to degree %d" % (i, u, k + 1)
                )
    return RecursionData(n, d, B, C)


# --- Favard conditions -------------------------------------------------------


@dataclass
class FavardReport:
    condition_a: bool
    condition_b: bool
    strict: bool
    witness_a: tuple | None = None
    witness_b: tuple | None = None
    mode_strict: bool = True

    def __bool__(self):
        return self.condition_a and self.condition_b

    @property
    def ok(self):
        return bool(self)

    def describe(self) -> str:
        parts = []
        if not self.condition_a:
            parts.append("condition (a) at %r" % (self.witness_a,))
        if not self.condition_b:
            parts.append("condition (b) at %r" % (self.witness_b,))
        return "; ".join(parts) or "none"

    def to_json(self) -> dict:
        def enc(x):
            if isinstance(x, tuple):
                return [enc(y) for y in x]
            if isinstance(x, Fraction):
                return format_rational(x)
            return x

        return {
            "condition_a": self.condition_a,
            "condition_b": self.condition_b,
            "faithful": self.strict,
            "mode": "strict" if self.mode_strict else "nonfaithful",
            "witness_a": enc(self.witness_a),
            "witness_b": enc(self.witness_b),
        }


def check_favard(r: RecursionData, strict: bool = True) -> FavardReport:
    """Conditions (a) and (b) for orthogonality with respect to a state.

    ``strict`` demands ``C[i, s, (i,s)] > 0`` (faithful); otherwise ``>= 0``
    is accepted.  The report's ``strict`` field records whether every such
    coefficient is in fact positive.
    """
    n, d = r.n, r.max_degree
    wa = None
    all_pos = True
    for (i, v, u), val in sorted(r.C.items(), key=lambda kv: (grlex_key(kv[0][2]), kv[0][0])):
        if u != (i,) + v:
            wa = wa or ("offdiagonal", i, v, u, val)
    for s in words(n, d - 2):
        for i in range(1, n + 1):
            val = r.c(i, s, (i,) + s)
            if val <= 0:
                all_pos = False
            if val < 0 or (strict and val == 0):
                wa = wa or ("diagonal", i, s, (i,) + s, val)
    wb = None
    for k in range(d):
        level = list(words(n, k, k))
        chains = {u: r.chain(u) for u in level}
        for i in range(1, n + 1):
            for a, s in enumerate(level):
                for u in level[a + 1:]:
                    lhs = r.b(i, s, u) * chains[s]
                    rhs = r.b(i, u, s) * chains[u]
                    if lhs != rhs:
                        wb = wb or (i, s, u, lhs, rhs)
    return FavardReport(wa is None, wb is None, all_pos, wa, wb, strict)


def norms(f: PolyFamily, m: MomentFunctional) -> dict:
    """``<P_u, P_u>`` cross-checked against the C-chain product.

    The chain for ``u`` uses ``x_i P_u`` itself, so only indices with
    ``|u| < f.max_degree`` are covered.
    """
    rec = extract_recursion(f, m)
    out = {}
    for u in f.indices(f.max_degree - 1):
        val = inner(m, f[u], f[u])
        if val != rec.chain(u):
            raise InconsistencyError(
                "<P_%s, P_%s> = %s but the recursion chain gives %s" % (u, u, val, rec.chain(u))
            )
        out[u] = val
    return out


# --- converse: state from recursion -----------------------------------------


def family_from_recursion(r: RecursionData) -> PolyFamily:
    """``P_(i,u) = x_i P_u - sum B P_w - sum C P_v``, degree by degree."""
    n, d = r.n, r.max_degree
    polys = {EMPTY: NCSeries.one(n, d)}
    bu = _index(r.B)
    cu = _index(r.C)
    for u in words(n, d - 1):
        for i in range(1, n + 1):
            p = x_times(i, polys[u].truncate(d - 1)).truncate(d)
            for w, val in bu.get((i, u), ()):
                p = p - polys[w].scale(val)
            for v, val in cu.get((i, u), ()):
                p = p - polys[v].scale(val)
            polys[(i,) + u] = p
    return PolyFamily(n, d, polys)


def _index(table):
    out = {}
    for (i, w, u), val in table.items():
        out.setdefault((i, u), []).append((w, val))
    return out


def _expand_monomial(b: Word, r: RecursionData, bu, cu, memo) -> dict:
    """Coordinates of ``x_b`` in the P basis, pushing letters in from the right."""
    if b in memo:
        return memo[b]
    if not b:
        out = {EMPTY: Fraction(1)}
    else:
        i = b[0]
        out = {}
        for u, coef in _expand_monomial(b[1:], r, bu, cu, memo).items():
            # x_i P_u = P_(i,u) + sum B P_w + sum C P_v
            key = (i,) + u
            out[key] = out.get(key, 0) + coef
            for w, val in bu.get((i, u), ()):
                out[w] = out.get(w, 0) + coef * val
            for v, val in cu.get((i, u), ()):
                out[v] = out.get(v, 0) + coef * val
        out = {k: v for k, v in out.items() if v}
    memo[b] = out
    return out


def state_from_recursion(r: RecursionData, order: int, strict: bool = True) -> MomentFunctional:
    """The functional making the recursion's family orthogonal with norms given by C chains.

    ``phi[x_a^* x_b] = sum_u alpha_u(a) alpha_u(b) V_u`` where ``alpha(.)`` are
    coordinates of monomials in the P basis, obtained by rewriting through
    the recursion.  Every admissible split of a word must give the same
    value.  Data for ``|u| <= d - 1`` fixes the moments through ``2d - 1``.
    """
    report = check_favard(r, strict=strict)
    if not report:
        raise FavardError(report)
    n, d = r.n, r.max_degree
    if order > 2 * d - 1:
        raise ValueError("recursion up to degree %d determines moments only to order %d" % (d, 2 * d - 1))
    bu, cu = _index(r.B), _index(r.C)
    memo: dict = {}
    chains: dict = {}

    def v_norm(u):
        if u not in chains:
            chains[u] = r.chain(u)
        return chains[u]

    vals = {}
    for w in words(n, order, 1):
        k = len(w)
        seen = None
        # |a| < d keeps every norm inside the range the chains determine
        for split in range(max(0, k - d), min(k, d - 1) + 1):
            a = op(w[:split])
            b = w[split:]
            ea = _expand_monomial(a, r, bu, cu, memo)
            eb = _expand_monomial(b, r, bu, cu, memo)
            val = sum((c * eb[u] * v_norm(u) for u, c in ea.items() if u in eb), Fraction(0))
            if seen is None:
                seen = val
            elif val != seen:
                raise InconsistencyError("moment of %s depends on the split (%s vs %s)" % (w, seen, val))
        vals[w] = seen
    return MomentFunctional(NCSeries(n, order, vals))
