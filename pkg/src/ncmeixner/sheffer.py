"""Free Sheffer families and free Meixner states.

Index convention: ``B[t][i][j]`` holds ``B^t_{ij}``, read off the cumulants
as ``R[x_j x_i x_t]`` (note j before i).  ``C[i][j][s][t]`` holds
``C^{st}_{ij}``.  Array indices are 0-based; words and all public
arguments named ``i, j, s, t`` are 1-based variable labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .favard import PolyFamily
from .ncseries import (
    EMPTY,
    NCSeries,
    SeriesTuple,
    as_fraction,
    comp_inverse,
    compose,
    format_rational,
    left_derive,
    mul,
    words,
)
from .ncstates import (
    Check,
    CumulantFunctional,
    MomentFunctional,
    NormalizationError,
    cumulants_from_moments,
    free_product_cumulants,
    is_tracial,
)


class PreconditionError(ValueError):
    pass


# --- one-variable free Meixner ----------------------------------------------


@dataclass(frozen=True)
class MeixnerParams1D:
    b: Fraction
    c: Fraction
    faithful: bool = True

    def __post_init__(self):
        object.__setattr__(self, "b", as_fraction(self.b))
        object.__setattr__(self, "c", as_fraction(self.c))
        if self.faithful and self.c <= -1:
            raise ValueError("c must exceed -1 for a faithful state, got %s" % self.c)
        if self.c < -1:
            raise ValueError("c must be at least -1, got %s" % self.c)


def one_d_meixner(p: MeixnerParams1D, order: int) -> CumulantFunctional:
    """Cumulants solving ``R/z^2 = 1 + b R/z + c (R/z)^2``.

    With ``g = R/z`` this is ``g = z (1 + b g + c g^2)``; the coefficient of
    ``z^k`` in ``g`` only needs lower ones.
    """
    if not isinstance(p, MeixnerParams1D):
        p = MeixnerParams1D(*p)
    b, c = p.b, p.c
    g = [Fraction(0)] * max(order, 1)
    if order >= 2:
        g[1] = Fraction(1)
    for k in range(2, order):
        conv = sum((g[a] * g[k - 1 - a] for a in range(1, k - 1)), Fraction(0))
        g[k] = b * g[k - 1] + c * conv
    vals = {(1,) * (k + 1): g[k] for k in range(1, order)}
    if order >= 2:
        gz = NCSeries(1, order - 1, {(1,) * k: g[k] for k in range(1, order)})
        z = NCSeries.var(1, 1, order - 1)
        resid = gz - z * (1 + gz.scale(b) + (gz * gz).scale(c))
        if not resid.is_zero():
            raise ArithmeticError("one-variable Meixner recursion left a residual: %s" % resid.pretty())
    r = NCSeries(1, order, vals)
    return CumulantFunctional(r, normalized=order >= 2)


def free_product_meixner(params: Sequence, order: int) -> CumulantFunctional:
    """Cumulants of the free product of one-variable free Meixner states."""
    return free_product_cumulants([one_d_meixner(p, order) for p in params])


# --- bivariate (x, z) series -------------------------------------------------
# keys are (x_word, z_word); x letters commute with z letters, so products
# concatenate the two words independently.


def _xz_mul(a: dict, b: dict, order: int) -> dict:
    out: dict = {}
    for (xa, za), va in a.items():
        room = order - len(za)
        for (xb, zb), vb in b.items():
            if len(zb) > room:
                continue
            key = (xa + xb, za + zb)
            out[key] = out.get(key, 0) + va * vb
    return {k: v for k, v in out.items() if v}


def _resolvent(f: dict, t: dict, order: int) -> dict:
    """``f (1 - t)^{-1}`` for ``t`` of z-valuation at least one."""
    by_deg: dict = {}
    for (xw, zw), v in t.items():
        if not zw:
            raise ValueError("resolvent argument has a z-free term")
        by_deg.setdefault(len(zw), {})[(xw, zw)] = v
    # g_k = sum_{j >= 1} t_j g_{k-j}, graded by z-degree
    g = {0: {(EMPTY, EMPTY): Fraction(1)}}
    for k in range(1, order + 1):
        acc: dict = {}
        for j in range(1, k + 1):
            if j in by_deg and g[k - j]:
                for key, v in _xz_mul(by_deg[j], g[k - j], order).items():
                    acc[key] = acc.get(key, 0) + v
        g[k] = {key: v for key, v in acc.items() if v}
    total: dict = {}
    for part in g.values():
        total.update(part)
    return _xz_mul(f, total, order)


def _family_from_h(h: dict, n: int, degree: int) -> PolyFamily:
    polys: dict = {}
    for (xw, zw), v in h.items():
        if zw and len(zw) <= degree:
            polys.setdefault(zw, {})[xw] = v
    fam = {u: NCSeries(n, degree, polys.get(u, {})) for u in words(n, degree, 1)}
    return PolyFamily(n, degree, fam)


def sheffer_from_generating(F: NCSeries, V: SeriesTuple, n: int | None = None) -> PolyFamily:
    """Coefficients in ``z`` of ``F(z) (1 - x . V(z))^{-1}``; checked monic."""
    n = F.n if n is None else n
    if F.n != n or V.n != n:
        raise ValueError("generating data disagree on the number of variables")
    if F.const != 1:
        raise ValueError("F must start with 1")
    if not V.is_unit_lower_triangular():
        raise ValueError("V must be z + higher-order terms")
    order = F.order
    if V.order != order:
        raise ValueError("F and V disagree on order")
    f = {(EMPTY, w): v for w, v in F.items()}
    t = {((i,), w): v for i, comp in enumerate(V, start=1) for w, v in comp.items()}
    return _family_from_h(_resolvent(f, t, order), n, order)


def _require_normalized(r: CumulantFunctional):
    s = r.series
    for i in range(1, r.n + 1):
        if s[(i,)]:
            raise NormalizationError("R[x_%d] = %s, must be 0" % (i, s[(i,)]))
        for j in range(1, r.n + 1):
            if r.order >= 2 and s[(i, j)] != int(i == j):
                raise NormalizationError("R[x_%d x_%d] = %s, must be %d" % (i, j, s[(i, j)], int(i == j)))
    if r.order < 2:
        raise NormalizationError("need cumulants to order at least 2")


def gradient_tuple(r: CumulantFunctional) -> SeriesTuple:
    """``(D_1 R, ..., D_n R)`` at order ``r.order - 1``."""
    _require_normalized(r)
    return SeriesTuple(left_derive(i, r.series) for i in range(1, r.n + 1))


def u_from_r(r: CumulantFunctional) -> SeriesTuple:
    """``U`` with ``(D_i R)(U(z)) = z_i``, at order ``r.order - 1``."""
    return comp_inverse(gradient_tuple(r))


def sheffer_from_state(r: CumulantFunctional, degree: int | None = None) -> PolyFamily:
    """Family with generating function ``(1 - x . U(z) + R(U(z)))^{-1}``.

    Degree ``k`` coefficients need ``U`` to degree ``k``, hence cumulants to
    order ``k + 1``.
    """
    top = r.order - 1
    d = top if degree is None else degree
    if d > top:
        raise ValueError("degree %d needs cumulants to order %d, have %d" % (d, d + 1, r.order))
    n = r.n
    if d <= 0:
        _require_normalized(r)
        return PolyFamily(n, 0, {})
    u = u_from_r(r).truncate(d)
    ru = compose(r.series.truncate(d), u)
    t = {((i,), w): v for i, comp in enumerate(u, start=1) for w, v in comp.items()}
    for w, v in ru.items():
        key = (EMPTY, w)
        t[key] = t.get(key, 0) - v
    return _family_from_h(_resolvent({(EMPTY, EMPTY): Fraction(1)}, t, d), n, d)


# --- quadratic fit -----------------------------------------------------------


def _zeros(*shape):
    if len(shape) == 1:
        return [Fraction(0)] * shape[0]
    return [_zeros(*shape[1:]) for _ in range(shape[0])]


def _enc(x):
    if isinstance(x, Fraction):
        return format_rational(x)
    if isinstance(x, (list, tuple)):
        return [_enc(y) for y in x]
    if isinstance(x, dict):
        return {k: _enc(v) for k, v in x.items()}
    return x


@dataclass
class MeixnerData:
    n: int
    B: list  # B[t][i][j] = B^t_{ij}
    C_general: list | None = None  # C[i][j][s][t] = C^{st}_{ij}
    C_diag: list | None = None  # C_diag[i][j] = C_{ij}
    residual_ok: bool = False
    residual_witness: tuple | None = None

    def b(self, t, i, j) -> Fraction:
        return self.B[t - 1][i - 1][j - 1]

    def c(self, i, j, s=None, t=None) -> Fraction:
        if s is None:
            return self.C_diag[i - 1][j - 1]
        return self.C_general[i - 1][j - 1][s - 1][t - 1]

    def matrices(self):
        """The matrices ``B^t`` as ``n x n`` lists, ``t = 1..n``."""
        return [[list(row) for row in bt] for bt in self.B]

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "B": _enc(self.B),
            "C_general": _enc(self.C_general),
            "C_diag": _enc(self.C_diag),
            "residual_ok": self.residual_ok,
            "residual_witness": _enc(list(self.residual_witness)) if self.residual_witness else None,
        }


def fit_quadratic(r: CumulantFunctional) -> MeixnerData:
    """Fit ``D_i D_j R = delta_ij + sum_t B^t_ij D_t R + sum_st C^st_ij D_s R D_t R``.

    ``B`` comes from degree one of ``D_i D_j R``, ``C`` from the degree-two
    residual; the identity is then checked through order ``r.order - 2``.
    """
    _require_normalized(r)
    n, order = r.n, r.order
    s = r.series
    rng = range(n)
    B = [[[s[(j + 1, i + 1, t + 1)] for j in rng] for i in rng] for t in rng]
    C = _zeros(n, n, n, n)
    for i in rng:
        for j in rng:
            for a in rng:
                for b in rng:
                    C[i][j][a][b] = s[(j + 1, i + 1, a + 1, b + 1)] - sum(
                        (B[tau][i][j] * s[(tau + 1, a + 1, b + 1)] for tau in rng), Fraction(0)
                    )
    data = MeixnerData(n, B, C)
    top = order - 2
    if top < 0:
        return data
    grad = [left_derive(t + 1, s).truncate(top) for t in rng]
    prods = [[mul(grad[a], grad[b]) for b in rng] for a in rng]
    one = NCSeries.one(n, top)
    witness = None
    for i in rng:
        for j in rng:
            lhs = left_derive(i + 1, left_derive(j + 1, s))
            rhs = one.scale(int(i == j))
            for t in rng:
                if B[t][i][j]:
                    rhs = rhs + grad[t].scale(B[t][i][j])
            for a in rng:
                for b in rng:
                    if C[i][j][a][b]:
                        rhs = rhs + prods[a][b].scale(C[i][j][a][b])
            diff = lhs - rhs
            if not diff.is_zero() and witness is None:
                w = diff.support()[0]
                witness = (i + 1, j + 1, w, lhs[w], rhs[w])
    data.residual_ok = witness is None
    data.residual_witness = witness
    diag = all(
        C[i][j][a][b] == 0 for i in rng for j in rng for a in rng for b in rng if (a, b) != (i, j)
    )
    if diag:
        data.C_diag = [[C[i][j][i][j] for j in rng] for i in rng]
    return data


@dataclass
class MeixnerReport:
    fits_quadratic: bool
    orth_condition_a: bool
    orth_condition_b: bool
    orth_condition_c: bool
    data: MeixnerData
    residual_ok: bool = False
    c_diagonal: bool = False
    u_identity_ok: bool = False
    witness_fit: object = None
    witness_a: object = None
    witness_b: object = None
    witness_c: object = None

    @property
    def is_free_meixner(self) -> bool:
        return self.fits_quadratic and self.orth_condition_a and self.orth_condition_b and self.orth_condition_c

    def __bool__(self):
        return self.is_free_meixner

    def to_json(self) -> dict:
        return {
            "is_free_meixner": self.is_free_meixner,
            "fits_quadratic": self.fits_quadratic,
            "residual_ok": self.residual_ok,
            "c_diagonal": self.c_diagonal,
            "u_identity_ok": self.u_identity_ok,
            "orth_condition_a": self.orth_condition_a,
            "orth_condition_b": self.orth_condition_b,
            "orth_condition_c": self.orth_condition_c,
            "witness_fit": _enc(self.witness_fit),
            "witness_a": _enc(self.witness_a),
            "witness_b": _enc(self.witness_b),
            "witness_c": _enc(self.witness_c),
            "data": self.data.to_json(),
        }


def u_identity_holds(u: SeriesTuple, data: MeixnerData) -> bool:
    """``z_j = U_j + sum B^t_ij U_i z_t + sum C^st_ij U_i z_s z_t``, i.e. ``U = z A^{-1}``."""
    n, order = u.n, u.order
    z = [NCSeries.var(k, n, order) for k in range(1, n + 1)]
    zz = [[mul(z[a], z[b]) for b in range(n)] for a in range(n)]
    for j in range(n):
        acc = u.components[j]
        for i in range(n):
            ui = u.components[i]
            lin = NCSeries.zero(n, order)
            for t in range(n):
                if data.B[t][i][j]:
                    lin = lin + z[t].scale(data.B[t][i][j])
            if data.C_general is not None:
                for a in range(n):
                    for b in range(n):
                        cval = data.C_general[i][j][a][b]
                        if cval:
                            lin = lin + zz[a][b].scale(cval)
            if not lin.is_zero():
                acc = acc + mul(ui, lin)
        if acc != z[j]:
            return False
    return True


def meixner_check(r: CumulantFunctional, strict: bool = True) -> MeixnerReport:
    """Decide whether ``r`` is the cumulant functional of a faithful free Meixner state.

    Never raises on a negative answer; every failed flag carries a witness.
    With ``strict=False`` the boundary ``C_ij = -1`` is admitted.
    """
    data = fit_quadratic(r)
    n = r.n
    rng = range(n)
    u_ok = False
    if data.residual_ok and r.order >= 2:
        u_ok = u_identity_holds(u_from_r(r), data)
    diag = data.C_diag is not None
    fits = data.residual_ok and diag and u_ok
    wfit = None
    if not data.residual_ok:
        wfit = {"reason": "residual", "at": data.residual_witness}
    elif not diag:
        i, j, a, b = next(
            (i, j, a, b)
            for i in rng for j in rng for a in rng for b in rng
            if (a, b) != (i, j) and data.C_general[i][j][a][b]
        )
        wfit = {"reason": "C not diagonal", "at": [i + 1, j + 1, a + 1, b + 1],
                "value": data.C_general[i][j][a][b]}
    elif not u_ok:
        wfit = {"reason": "U identity"}
    wa = wb = wc = None
    ok_a = ok_b = ok_c = False
    if diag:
        cd = data.C_diag
        for i in rng:
            for j in rng:
                bad = cd[i][j] <= -1 if strict else cd[i][j] < -1
                if bad and wa is None:
                    wa = {"i": i + 1, "j": j + 1, "C": cd[i][j]}
        ok_a = wa is None
    B = data.B
    for i in rng:
        for j in rng:
            for t in rng:
                if B[t][i][j] != B[j][i][t] and wb is None:
                    wb = {"i": i + 1, "j": j + 1, "t": t + 1, "B^t_ij": B[t][i][j], "B^j_it": B[j][i][t]}
    ok_b = wb is None
    if diag:
        cd = data.C_diag
        for j in rng:
            for t in rng:
                if all(B[t][i][j] == 0 for i in rng):
                    continue
                for u in rng:
                    if cd[j][u] != cd[t][u] and wc is None:
                        wc = {"j": j + 1, "t": t + 1, "u": u + 1, "C_ju": cd[j][u], "C_tu": cd[t][u]}
        ok_c = wc is None
    return MeixnerReport(fits, ok_a, ok_b, ok_c, data, data.residual_ok, diag, u_ok, wfit, wa, wb, wc)


# --- rotations ---------------------------------------------------------------


class RationalOrthogonalMatrix:
    """Square matrix of rationals with ``O^T O = I`` exactly."""

    def __init__(self, rows):
        rows = [[as_fraction(x) for x in row] for row in rows]
        n = len(rows)
        if n == 0 or any(len(row) != n for row in rows):
            raise ValueError("matrix must be square and non-empty")
        for a in range(n):
            for b in range(n):
                dot = sum((rows[k][a] * rows[k][b] for k in range(n)), Fraction(0))
                if dot != int(a == b):
                    raise ValueError("matrix is not orthogonal: (O^T O)[%d][%d] = %s" % (a, b, dot))
        self.rows = tuple(tuple(row) for row in rows)

    @property
    def n(self):
        return len(self.rows)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    @property
    def T(self) -> "RationalOrthogonalMatrix":
        return RationalOrthogonalMatrix(list(zip(*self.rows)))

    def as_lists(self):
        return [list(r) for r in self.rows]

    def to_json(self):
        return [[format_rational(x) for x in row] for row in self.rows]

    def __eq__(self, other):
        return isinstance(other, RationalOrthogonalMatrix) and self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)


def rotate(m, O: RationalOrthogonalMatrix):
    """Functional of ``y = O^{-1} x``: ``y_v = sum_u prod_k O[u(k), v(k)] x_u``.

    Works for moments and cumulants alike (both are multilinear in the
    variables): the generating series becomes ``F(O w)``.
    """
    if not isinstance(O, RationalOrthogonalMatrix):
        O = RationalOrthogonalMatrix(O)
    if O.n != m.n:
        raise ValueError("matrix is %dx%d for n=%d" % (O.n, O.n, m.n))
    sub = SeriesTuple.linear(O.as_lists(), m.order)
    return type(m)(compose(m.series, sub), m.normalized)


# --- tracial diagnostics -----------------------------------------------------


def cyclic_b_check(m: MomentFunctional, data: MeixnerData | None = None) -> Check:
    """Cyclic symmetries of ``B`` and of ``sum_t B^t_ij B^d_ct + C^cd_ij``.

    For free Meixner states also checks full permutation symmetry of ``B``
    and, when ``C`` vanishes, that the matrices ``B^t`` commute.
    """
    tr = is_tracial(m)
    if not tr:
        raise PreconditionError("state is not tracial (witness %r)" % (tr.witness,))
    r = cumulants_from_moments(m)
    if data is None:
        data = fit_quadratic(r)
    n = m.n
    rng = range(n)
    B, C = data.B, data.C_general

    def tri(j, i, t):
        return B[t][i][j]

    for j in rng:
        for i in rng:
            for t in rng:
                if not tri(j, i, t) == tri(i, t, j) == tri(t, j, i):
                    return Check(False, ("B not cyclic", (j + 1, i + 1, t + 1)))

    def quad(j, i, c, d):
        return sum((B[t][i][j] * B[d][c][t] for t in rng), Fraction(0)) + C[i][j][c][d]

    for j in rng:
        for i in rng:
            for c in rng:
                for d in rng:
                    if quad(j, i, c, d) != quad(i, c, d, j):
                        return Check(False, ("quartic term not cyclic", (j + 1, i + 1, c + 1, d + 1)))
    report = meixner_check(r)
    if report.is_free_meixner:
        for i in rng:
            for j in rng:
                for t in rng:
                    vals = {B[t][i][j], B[t][j][i], B[i][j][t], B[i][t][j], B[j][i][t], B[j][t][i]}
                    if len(vals) > 1:
                        return Check(False, ("B not fully symmetric", (i + 1, j + 1, t + 1)))
        if all(x == 0 for row in report.data.C_diag for x in row):
            for a in rng:
                for b in rng:
                    if _matmul(B[a], B[b]) != _matmul(B[b], B[a]):
                        return Check(False, ("B matrices do not commute", (a + 1, b + 1)))
    return Check(True)


def _matmul(x, y):
    n = len(x)
    return [[sum((x[i][k] * y[k][j] for k in range(n)), Fraction(0)) for j in range(n)] for i in range(n)]


def joint_diagonalize(mats, tol: float = 1e-12, max_sweeps: int = 100):
    """Jacobi-angle joint diagonalization of real symmetric matrices.

    Returns ``(V, D)`` with ``V`` orthogonal and ``D[k] = V^T mats[k] V``.
    Sweeps pairs ``(p, q)`` in a fixed order and stops when a full sweep
    applies no rotation with ``|sin| > tol``.
    """
    A = np.array(mats, dtype=float).copy()
    k, n, _ = A.shape
    V = np.eye(n)
    for _ in range(max_sweeps):
        rotated = False
        for p in range(n):
            for q in range(p + 1, n):
                g = np.vstack([A[:, p, p] - A[:, q, q], A[:, p, q] + A[:, q, p]])
                gg = g @ g.T
                ton = gg[0, 0] - gg[1, 1]
                toff = gg[0, 1] + gg[1, 0]
                theta = 0.5 * np.arctan2(toff, ton + np.hypot(ton, toff))
                c, s = np.cos(theta), np.sin(theta)
                if abs(s) <= tol:
                    continue
                rotated = True
                G = np.array([[c, -s], [s, c]])
                cols = [p, q]
                A[:, :, cols] = A[:, :, cols] @ G
                A[:, cols, :] = np.einsum("ji,kjl->kil", G, A[:, cols, :])
                V[:, cols] = V[:, cols] @ G
        if not rotated:
            break
    return V, A


@dataclass
class FirstOrderDiagnostic:
    rotation: list
    b: list
    kinds: list
    residual: float
    eigen_b: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "rotation": [["%.17g" % x for x in row] for row in self.rotation],
            "b": ["%.17g" % x for x in self.b],
            "kinds": self.kinds,
            "residual": "%.3g" % self.residual,
        }


def characterize_first_order(m: MomentFunctional, zero_tol: float = 1e-9) -> FirstOrderDiagnostic:
    """Floating-point search for the rotation that makes ``m`` a free product.

    Requires a tracial free Meixner state with ``C = 0``.  The matrices
    ``B^t`` are jointly diagonalized by ``O``; coordinate ``a`` gets
    ``b_a = sum_k (O^T B^k O)_aa O_ka``.
    """
    tr = is_tracial(m)
    if not tr:
        raise PreconditionError("state is not tracial (witness %r)" % (tr.witness,))
    r = cumulants_from_moments(m)
    report = meixner_check(r)
    if not report.is_free_meixner:
        raise PreconditionError("state is not free Meixner")
    if any(x != 0 for row in report.data.C_diag for x in row):
        raise PreconditionError("C is not identically zero")
    mats = [[[float(x) for x in row] for row in bt] for bt in report.data.B]
    n = m.n
    V, D = joint_diagonalize(mats)
    off = D.copy()
    for k in range(n):
        np.fill_diagonal(off[k], 0.0)
    residual = float(np.sqrt((off**2).sum()))
    diag = np.array([np.diag(D[k]) for k in range(n)])  # diag[k][a] = b^k_a
    b = [float(sum(diag[k][a] * V[k, a] for k in range(n))) for a in range(n)]
    kinds = ["semicircular" if abs(x) < zero_tol else "free_poisson" for x in b]
    return FirstOrderDiagnostic(V.tolist(), b, kinds, residual, diag.tolist())
