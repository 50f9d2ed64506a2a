"""Exact sparse linear algebra over Q(q^(1/2)).

Vectors are dicts from hashable column labels to nonzero Scalars.  Column
labels are compared through a ``key`` function; pivots are the largest
columns, which makes reduced residuals canonical for a fixed span.
"""

from __future__ import annotations

from typing import Callable, Hashable, Iterable, Mapping

from ..errors import Inconsistent
from .poly import NCPoly, add_scaled
from .scalar import ONE, ZERO, Scalar, as_scalar


def _default_key(c):
    return c


class Echelon:
    """Incrementally maintained echelon basis of a span of sparse vectors.

    Each stored row has pivot coefficient 1 at its largest column.  Rows are
    not kept fully reduced, yet residuals are canonical because every row's
    pivot is its maximal column.
    """

    def __init__(self, key: Callable = _default_key):
        self.key = key
        self.rows: dict = {}        # pivot column -> row dict
        self.tags: dict = {}        # pivot column -> combination of inserted tags
        self._order: list = []

    def __len__(self):
        return len(self.rows)

    @property
    def rank(self) -> int:
        return len(self.rows)

    def reduce(self, vec: Mapping, track=None):
        """Residual of ``vec`` modulo the span (and, if track is a dict, the
        combination of tags subtracted)."""
        v = {k: x for k, x in vec.items() if not x.is_zero()}
        rows = self.rows
        key = self.key
        while True:
            piv = [c for c in v if c in rows]
            if not piv:
                return v
            c = max(piv, key=key)
            coeff = v[c]
            add_scaled(v, rows[c], -coeff)
            if track is not None:
                add_scaled(track, self.tags[c], coeff)

    def add(self, vec: Mapping, tag=None) -> bool:
        """Insert a vector; returns True if it enlarged the span."""
        track = {} if tag is not None or self.tags else None
        v = self.reduce(vec, track)
        if not v:
            return False
        c = max(v, key=self.key)
        inv = v[c].inverse()
        row = {k: x * inv for k, x in v.items()}
        self.rows[c] = row
        if track is not None or tag is not None:
            t = {} if track is None else {k: -x for k, x in track.items()}
            if tag is not None:
                t[tag] = t.get(tag, ZERO) + ONE
            self.tags[c] = {k: x * inv for k, x in t.items() if not x.is_zero()}
        self._order.append(c)
        return True

    def contains(self, vec: Mapping) -> bool:
        return not self.reduce(vec)

    def express(self, vec: Mapping):
        """Coefficients of vec as a combination of inserted tags, or None."""
        track: dict = {}
        if self.reduce(vec, track):
            return None
        return track

    def basis(self) -> list:
        """Rows in fully reduced echelon form, sorted by decreasing pivot."""
        pivots = sorted(self.rows, key=self.key)
        res = {}
        for c in pivots:
            row = dict(self.rows[c])
            for c2 in [x for x in row if x != c and x in res]:
                coeff = row.get(c2)
                if coeff is not None:
                    add_scaled(row, res[c2], -coeff)
            res[c] = row
        return [res[c] for c in reversed(pivots)]


def rank(vectors: Iterable[Mapping], key: Callable = _default_key) -> int:
    e = Echelon(key)
    for v in vectors:
        e.add(v)
    return e.rank


def solve_linear(equations: Iterable, unknowns: list | None = None):
    """Solve a Scalar-linear system.

    ``equations`` is an iterable of ``(coeffs, rhs)`` with ``coeffs`` a dict
    unknown -> Scalar and ``rhs`` a Scalar (or a dict with only the key
    ``None``).  Unknowns are eliminated in the order given by ``unknowns``
    (default: first appearance); free unknowns are the later ones.

    Returns ``(particular, nullspace)``: a dict solution and a list of dict
    basis vectors of the homogeneous solution space.  Raises Inconsistent.
    """
    eqs = []
    order: list = [] if unknowns is None else list(unknowns)
    seen = set(order)
    for coeffs, rhs in equations:
        row = {}
        for u, c in coeffs.items():
            c = as_scalar(c)
            if c.is_zero():
                continue
            row[u] = row.get(u, ZERO) + c
            if u not in seen:
                seen.add(u)
                order.append(u)
        row = {u: c for u, c in row.items() if not c.is_zero()}
        rhs = as_scalar(rhs) if rhs is not None else ZERO
        eqs.append((row, rhs))
    pos = {u: i for i, u in enumerate(order)}
    RHS = object()
    # pivot on the earliest unknown: use key = -position so "max" = earliest
    ech = Echelon(key=lambda u: (-1, 0) if u is RHS else (0, -pos[u]))
    # the rhs column sorts below every unknown, so it is a pivot only for a
    # row reading 0 = nonzero
    for row, rhs in eqs:
        v = dict(row)
        if not rhs.is_zero():
            v[RHS] = -rhs
        if not v:
            continue
        ech.add(v)
    if RHS in ech.rows:
        raise Inconsistent("linear system has no solution")
    rows = ech.basis()
    pivots = set()
    sol = {}
    piv_rows = {}
    for r in rows:
        p = max(r, key=ech.key)
        pivots.add(p)
        piv_rows[p] = r
    free = [u for u in order if u not in pivots]
    for p, r in piv_rows.items():
        # p + sum_{free} r[f] f + r[RHS] = 0
        sol[p] = -r.get(RHS, ZERO)
    particular = {u: c for u, c in sol.items() if not c.is_zero()}
    null = []
    for f in free:
        vec = {f: ONE}
        for p, r in piv_rows.items():
            c = r.get(f)
            if c is not None:
                vec[p] = -c
        null.append(vec)
    return particular, null


def nullspace(columns: list, vectors: Mapping) -> list:
    """Kernel of the linear map sending unknown ``columns[i]`` to ``vectors[columns[i]]``.

    ``vectors`` maps each unknown to its image (a dict over target labels).
    Returns kernel basis vectors as dicts over unknowns.
    """
    eq_rows: dict = {}
    for u in columns:
        for t, c in vectors.get(u, {}).items():
            eq_rows.setdefault(t, {})[u] = c
    _, null = solve_linear(((row, ZERO) for row in eq_rows.values()), unknowns=columns)
    return null


def poly_vector(p: NCPoly) -> dict:
    return dict(p.terms)


def combine(vectors: Mapping, coeffs: Mapping) -> dict:
    """Sum_u coeffs[u] * vectors[u]."""
    out: dict = {}
    for u, c in coeffs.items():
        add_scaled(out, vectors[u], c)
    return out


def mat_mul(A: list, B: list) -> list:
    n, m, p = len(A), len(B), len(B[0]) if B else 0
    out = []
    for i in range(n):
        row = []
        for j in range(p):
            acc = ZERO
            for k in range(m):
                acc = acc + A[i][k] * B[k][j]
            row.append(acc)
        out.append(row)
    return out


def mat_inverse(M: list) -> list:
    """Inverse of a square Scalar matrix (ZeroDivisionError if singular)."""
    n = len(M)
    A = [list(M[i]) + [ONE if i == j else ZERO for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if not A[r][col].is_zero()), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        A[col], A[piv] = A[piv], A[col]
        inv = A[col][col].inverse()
        A[col] = [x * inv for x in A[col]]
        for r in range(n):
            if r != col and not A[r][col].is_zero():
                f = A[r][col]
                A[r] = [x - f * y for x, y in zip(A[r], A[col])]
    return [row[n:] for row in A]


def trace(M: list) -> Scalar:
    acc = ZERO
    for i in range(len(M)):
        acc = acc + M[i][i]
    return acc
