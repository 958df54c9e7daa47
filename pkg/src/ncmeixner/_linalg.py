"""Exact rational linear algebra on lists of lists of Fractions."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction


class SingularMatrixError(ArithmeticError):
    pass


def solve(a, b):
    """Solve ``a x = b`` exactly by Gaussian elimination with row pivoting.

    ``b`` may be a vector or a list of column vectors given as rows of a
    matrix (``len(b) == len(a)`` with each ``b[r]`` a list).
    """
    n = len(a)
    multi = bool(b) and isinstance(b[0], (list, tuple))
    m = [list(map(Fraction, row)) + (list(map(Fraction, b[r])) if multi else [Fraction(b[r])]) for r, row in enumerate(a)]
    width = len(m[0]) if m else 0
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col]), None)
        if piv is None:
            raise SingularMatrixError("singular at column %d" % col)
        m[col], m[piv] = m[piv], m[col]
        inv = 1 / m[col][col]
        prow = m[col]
        for r in range(n):
            if r != col and m[r][col]:
                f = m[r][col] * inv
                row = m[r]
                for k in range(col, width):
                    if prow[k]:
                        row[k] -= f * prow[k]
    sol = [[m[r][k] / m[r][r] for k in range(n, width)] for r in range(n)]
    return sol if multi else [s[0] for s in sol]


def transpose(a):
    return [list(col) for col in zip(*a)]


def matmul(a, b):
    bt = transpose(b)
    return [[sum((x * y for x, y in zip(row, col)), Fraction(0)) for col in bt] for row in a]


def identity(n):
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def quad_form(g, v):
    return sum((v[i] * g[i][j] * v[j] for i in range(len(v)) for j in range(len(v)) if v[i] and v[j]), Fraction(0))


@dataclass
class PSDCertificate:
    is_psd: bool
    is_pd: bool
    pivots: list = field(default_factory=list)  # (index, pivot value) in elimination order
    witness: list | None = None
    witness_value: Fraction | None = None


def certify_psd(g) -> PSDCertificate:
    """Exact semidefiniteness test by symmetric elimination.

    Pivots on the largest remaining diagonal.  Each remaining index k keeps a
    vector ``vec[k]`` in original coordinates with ``S[k][l] = vec[k]^T g vec[l]``
    for the current Schur complement S, so any failure yields a witness
    ``v`` with ``v^T g v < 0`` directly.  ``g`` is symmetrized first; the
    quadratic form only sees the symmetric part.
    """
    n = len(g)
    s = [[(Fraction(g[i][j]) + Fraction(g[j][i])) / 2 for j in range(n)] for i in range(n)]
    vec = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    active = list(range(n))
    pivots = []
    while active:
        neg = next((k for k in active if s[k][k] < 0), None)
        if neg is not None:
            return PSDCertificate(False, False, pivots, vec[neg], s[neg][neg])
        p = max(active, key=lambda k: (s[k][k], -k))
        if s[p][p] == 0:
            for k in active:
                for l in active:
                    if k != l and s[k][l]:
                        t = -s[k][l]
                        w = [x + t * y for x, y in zip(vec[k], vec[l])]
                        return PSDCertificate(False, False, pivots, w, 2 * t * s[k][l])
            # remaining block vanishes identically: semidefinite, rank deficient
            pivots.extend((k, Fraction(0)) for k in active)
            return PSDCertificate(True, False, pivots)
        d = s[p][p]
        pivots.append((p, d))
        active.remove(p)
        for k in active:
            f = s[k][p] / d
            if not f:
                continue
            for l in active:
                s[k][l] -= f * s[p][l]
            vk, vp = vec[k], vec[p]
            vec[k] = [x - f * y for x, y in zip(vk, vp)]
        for k in active:
            s[k][p] = s[p][k] = Fraction(0)
    return PSDCertificate(True, True, pivots)
