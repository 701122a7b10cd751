"""Uniform-risk reliability polynomials and the first-choice crossover.

With every edge risk set to the same symbol ``alpha``, the bat-eye
recursion turns each accumulated risk into a polynomial in ``alpha`` with
integer coefficients.  The attempt order at a vertex may change with
``alpha``; :func:`accumulate_symbolic` splits ``(0, 1)`` into pieces on
which every order is constant.
"""

from __future__ import annotations

import bisect
import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Callable, Iterable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from riskroute.graph import Dag

GRID = 4096
ROOT_TOL = 1e-9


class Polynomial:
    """Univariate polynomial with exact integer coefficients, constant term first."""

    __slots__ = ("coefficients",)

    def __init__(self, coefficients: Iterable[int] = ()):
        coeffs = [int(c) for c in coefficients]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        self.coefficients: tuple[int, ...] = tuple(coeffs)

    @classmethod
    def constant(cls, c: int) -> Polynomial:
        return cls([c])

    @classmethod
    def monomial(cls, power: int, c: int = 1) -> Polynomial:
        return cls([0] * power + [c])

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def is_zero(self) -> bool:
        return not self.coefficients

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Polynomial):
            return self.coefficients == other.coefficients
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.coefficients)

    def __repr__(self) -> str:
        return f"Polynomial({list(self.coefficients)})"

    def __str__(self) -> str:
        if not self.coefficients:
            return "0"
        terms = []
        for power in range(self.degree, -1, -1):
            c = self.coefficients[power]
            if c == 0:
                continue
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            body = {0: f"{mag}", 1: "a", }.get(power, f"a^{power}") if power else f"{mag}"
            if power and mag != 1:
                body = f"{mag}*{body}"
            terms.append(f"{sign} {body}")
        text = " ".join(terms)
        return text[2:] if text.startswith("+ ") else "-" + text[2:]

    def __add__(self, other: Polynomial) -> Polynomial:
        return poly_add(self, other)

    def __sub__(self, other: Polynomial) -> Polynomial:
        return poly_add(self, poly_scale(other, -1))

    def __mul__(self, other: Polynomial) -> Polynomial:
        return poly_mul(self, other)

    def __call__(self, x):
        return poly_eval(self, x)


ZERO = Polynomial()
ONE = Polynomial.constant(1)
ALPHA = Polynomial.monomial(1)
ONE_MINUS_ALPHA = Polynomial([1, -1])


def poly_add(a: Polynomial, b: Polynomial) -> Polynomial:
    n = max(len(a.coefficients), len(b.coefficients))
    ca = a.coefficients + (0,) * (n - len(a.coefficients))
    cb = b.coefficients + (0,) * (n - len(b.coefficients))
    return Polynomial(x + y for x, y in zip(ca, cb))


def poly_scale(a: Polynomial, c: int) -> Polynomial:
    return Polynomial(c * x for x in a.coefficients)


def poly_mul(a: Polynomial, b: Polynomial) -> Polynomial:
    if a.is_zero() or b.is_zero():
        return ZERO
    out = [0] * (len(a.coefficients) + len(b.coefficients) - 1)
    for i, x in enumerate(a.coefficients):
        if x:
            for j, y in enumerate(b.coefficients):
                out[i + j] += x * y
    return Polynomial(out)


def poly_por(a: Polynomial, b: Polynomial) -> Polynomial:
    """Probabilistic OR ``a + b - a*b``."""
    return a + b - a * b


def poly_eval(p: Polynomial, x):
    """Horner evaluation.  Floats give a float; Fractions evaluate exactly."""
    acc = 0 if isinstance(x, (int, Fraction)) else 0.0
    for c in reversed(p.coefficients):
        acc = acc * x + c
    return acc


def sign_at(p: Polynomial, x: float | Fraction) -> int:
    value = poly_eval(p, Fraction(x))
    return (value > 0) - (value < 0)


def _signs(p: Polynomial, xs: Sequence[float]) -> list[int]:
    """Exact signs of ``p`` at ``xs``; floats first, Fractions where in doubt."""
    x = np.asarray(xs, dtype=float)
    coeffs = np.array(p.coefficients, dtype=float)
    values = P.polyval(x, coeffs)
    bound = P.polyval(np.abs(x), np.abs(coeffs)) * 1e-12
    signs = np.sign(values).astype(int).tolist()
    for k in np.flatnonzero(np.abs(values) <= bound):
        signs[k] = sign_at(p, xs[k])
    return signs


def _bisect_change(changed: Callable[[float], bool], lo: float, hi: float, tol: float = ROOT_TOL) -> float:
    """Locate the point in ``(lo, hi)`` where ``changed`` flips from False to True."""
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if changed(mid):
            hi = mid
        else:
            lo = mid
    return (lo + hi) / 2


def isolate_roots(p: Polynomial, lo: float = 0.0, hi: float = 1.0, grid: int = GRID, tol: float = ROOT_TOL) -> list[float]:
    """Sign-changing roots of ``p`` strictly inside ``(lo, hi)``.

    Scans the global grid ``k/grid`` falling inside the interval, then bisects
    each bracket with exact sign evaluation.  Roots of even multiplicity and
    pairs of roots closer than one grid cell are not reported.
    """
    if p.is_zero() or p.degree == 0:
        return []
    k_lo, k_hi = math.floor(lo * grid) + 1, math.ceil(hi * grid) - 1
    points = [lo] + [k / grid for k in range(k_lo, k_hi + 1) if lo < k / grid < hi] + [hi]
    signs = _signs(p, points)
    roots = []
    last_x, last_s, zero_at = None, 0, None
    for x, s in zip(points, signs):
        if s == 0:
            if zero_at is None:
                zero_at = x
            continue
        if last_s and s != last_s:
            if zero_at is not None:
                if lo < zero_at < hi:
                    roots.append(zero_at)
            else:
                start = last_s
                roots.append(_bisect_change(lambda m: sign_at(p, m) != start, last_x, x, tol))
        last_x, last_s, zero_at = x, s, None
    return roots


# --- piecewise symbolic accumulation ----------------------------------------


@dataclass(frozen=True)
class Piece:
    """Interval ``[lo, hi]`` of alpha on which every attempt order is fixed."""

    lo: float
    hi: float
    polynomials: dict[str, Polynomial]
    vertex_order: dict[str, tuple[str, ...]]
    beyond: dict[str, Polynomial]

    @property
    def midpoint(self) -> float:
        return (self.lo + self.hi) / 2


@dataclass(frozen=True)
class PiecewiseAccumulation:
    breakpoints: tuple[float, ...]
    pieces: tuple[Piece, ...]
    source: str
    destination: str
    attempt_order_edges: dict[str, str | None]
    heads: dict[str, str]

    def piece_at(self, alpha: float) -> Piece:
        """Piece containing ``alpha``; a breakpoint belongs to the piece on its left."""
        k = bisect.bisect_left(self.breakpoints, alpha)
        return self.pieces[min(k, len(self.pieces) - 1)]

    def polynomial(self, edge_id: str, alpha: float = 0.5) -> Polynomial:
        return self.piece_at(alpha).polynomials[edge_id]

    def attempt_order(self, edge_id: str, alpha: float) -> tuple[str, ...]:
        head = self.attempt_order_edges[edge_id]
        if head is None:
            return ()
        return self.piece_at(alpha).vertex_order.get(head, ())

    def source_polynomial(self, out_edges: Sequence[str], alpha: float) -> Polynomial:
        """Failure polynomial at the source for the attempt order used at ``alpha``."""
        piece = self.piece_at(alpha)
        order = _order_at(out_edges, piece.polynomials, alpha)
        return _inner(order, piece.beyond, self.heads)

    def remainder(self, edge_id: str, alpha: float = 0.5) -> Polynomial:
        """Risk left after committing to ``edge_id``: the bracketed term at its head."""
        return self.piece_at(alpha).beyond[self.heads[edge_id]]

    def to_json_dict(self) -> list[dict]:
        out = []
        edge_ids = sorted(self.pieces[0].polynomials)
        for eid in edge_ids:
            pieces = [
                {"interval": [_num(p.lo), _num(p.hi)], "coefficients": list(p.polynomials[eid].coefficients)}
                for p in self.pieces
            ]
            out.append({"edge": eid, "pieces": pieces})
        return out


def _num(x: float):
    return int(x) if float(x).is_integer() else float(f"{x:.12g}")


def _inner(order: Sequence[str], beyond: dict[str, Polynomial], heads: dict[str, str]) -> Polynomial:
    """Bracketed bat-eye term with every edge risk equal to alpha."""
    total = Polynomial.monomial(len(order))
    for k, j in enumerate(order):
        weight = ONE_MINUS_ALPHA * Polynomial.monomial(k)
        total = total + weight * beyond[heads[j]]
    return total


def _order_at(edges: Sequence[str], polys: dict[str, Polynomial], x: float) -> tuple[str, ...]:
    q = Fraction(x)
    return tuple(sorted(edges, key=lambda j: (poly_eval(polys[j], q), j)))


def accumulate_symbolic(dag: Dag, grid: int = GRID, tol: float = ROOT_TOL) -> PiecewiseAccumulation:
    """Bat-eye polynomials for every edge with all risks replaced by alpha.

    Vertices are settled from the destination backward.  For each piece of
    the current partition of ``(0, 1)`` the out-edge polynomials of the
    vertex are fixed, so every sign-changing root of a pairwise difference
    inside the piece splits it.  Adjacent pieces whose orders all agree are
    merged at the end.
    """
    heads = {e.id: e.head for e in dag.edges}
    into: dict[str, list[str]] = {v: [] for v in dag.vertices}
    for e in dag.edges:
        into[e.head].append(e.id)
    terminal = {e.id: ALPHA for e in dag.edges if e.head == dag.destination}
    # Piece state: (lo, hi, edge polys, vertex polys, vertex orders)
    start = (0.0, 1.0, terminal, {dag.destination: ZERO}, {dag.destination: ()})
    pieces: list[tuple] = [start]

    for vertex in reversed(dag.topological_order):
        if vertex == dag.destination or not into[vertex]:
            # No edge's attempt order lives here (e.g. the source).
            continue
        out = dag.out_edges(vertex)
        refined = []
        for lo, hi, polys, beyond, orders in pieces:
            cuts = []
            for j, k in combinations(out, 2):
                cuts.extend(isolate_roots(polys[j] - polys[k], lo, hi, grid, tol))
            bounds = [lo] + sorted(set(cuts)) + [hi]
            for a, b in zip(bounds, bounds[1:]):
                if b <= a:
                    continue
                order = _order_at(out, polys, (a + b) / 2)
                inner = _inner(order, beyond, heads)
                new_polys = dict(polys)
                edge_poly = poly_por(ALPHA, inner)
                for eid in into[vertex]:
                    new_polys[eid] = edge_poly
                refined.append((a, b, new_polys, {**beyond, vertex: inner}, {**orders, vertex: order}))
        pieces = refined

    merged: list[tuple] = []
    for item in pieces:
        if merged and merged[-1][4] == item[4]:
            prev = merged[-1]
            merged[-1] = (prev[0], item[1], prev[2], prev[3], prev[4])
        else:
            merged.append(item)

    built = tuple(
        Piece(lo=lo, hi=hi, polynomials=polys, vertex_order=orders, beyond=beyond)
        for lo, hi, polys, beyond, orders in merged
    )
    return PiecewiseAccumulation(
        breakpoints=tuple(p.hi for p in built[:-1]),
        pieces=built,
        source=dag.source,
        destination=dag.destination,
        attempt_order_edges={e.id: None if e.head == dag.destination else e.head for e in dag.edges},
        heads=heads,
    )


def symbolic_eagle(dag: Dag) -> dict[str, Polynomial]:
    """Eagle-eye polynomials under uniform alpha (no ordering involved)."""
    from riskroute.graph import reverse_topological_edge_order

    polys: dict[str, Polynomial] = {}
    for eid in reverse_topological_edge_order(dag):
        edge = dag.edge(eid)
        if edge.head == dag.destination:
            polys[eid] = ALPHA
            continue
        product = ONE
        for j in dag.out_edges(edge.head):
            product = product * polys[j]
        polys[eid] = poly_por(ALPHA, product)
    return polys


# --- crossovers and sweeps -------------------------------------------------


@dataclass(frozen=True)
class Crossover:
    alpha: float
    vertex: str
    before: tuple[str, ...]
    after: tuple[str, ...]

    def describe(self) -> str:
        return f"at {self.vertex}: {' > '.join(self.before)} -> {' > '.join(self.after)}"

    def to_dict(self) -> dict:
        return {
            "alpha": float(f"{self.alpha:.12g}"),
            "vertex": self.vertex,
            "before": list(self.before),
            "after": list(self.after),
            "description": self.describe(),
        }


def first_choice(sym: PiecewiseAccumulation, dag: Dag, alpha: float) -> str | None:
    """Source out-edge with the smallest polynomial value at ``alpha`` (ties by id)."""
    out = dag.out_edges(dag.source)
    if not out:
        return None
    piece = sym.piece_at(alpha)
    return _order_at(out, piece.polynomials, alpha)[0]


def find_crossovers(
    dag: Dag,
    sym: PiecewiseAccumulation | None = None,
    all_edges: bool = False,
    grid: int = GRID,
    tol: float = ROOT_TOL,
) -> list[Crossover]:
    """Values of alpha in ``(0, 1)`` where the greedy first choice changes.

    With ``all_edges`` the report instead lists every attempt-order change at
    any vertex, i.e. the piece breakpoints.
    """
    sym = sym or accumulate_symbolic(dag, grid, tol)
    if all_edges:
        found = []
        for left, right in zip(sym.pieces, sym.pieces[1:]):
            for v in sorted(left.vertex_order):
                if left.vertex_order[v] != right.vertex_order[v]:
                    found.append(Crossover(left.hi, v, left.vertex_order[v], right.vertex_order[v]))
        return found
    if len(dag.out_edges(dag.source)) < 2:
        return []

    def choice(x: float) -> str | None:
        return first_choice(sym, dag, x)

    found = []
    xs = [k / grid for k in range(1, grid)]
    prev_x, prev_c = xs[0], choice(xs[0])
    for x in xs[1:]:
        c = choice(x)
        if c != prev_c:
            start = prev_c
            at = _bisect_change(lambda m: choice(m) != start, prev_x, x, tol)
            found.append(Crossover(at, dag.source, (prev_c,), (c,)))
        prev_x, prev_c = x, c
    return found


def sweep(dag: Dag, steps: int = 101, sym: PiecewiseAccumulation | None = None) -> list[dict]:
    """Failure probability of each source out-edge over ``alpha = k/(steps-1)``."""
    if steps < 2:
        raise ValueError("steps must be at least 2")
    sym = sym or accumulate_symbolic(dag)
    out = dag.out_edges(dag.source)
    rows = []
    for k in range(steps):
        alpha = k / (steps - 1)
        piece = sym.piece_at(alpha)
        row: dict = {"alpha": alpha}
        for eid in out:
            row[eid] = poly_eval(piece.polynomials[eid], alpha)
        row["chosen"] = _order_at(out, piece.polynomials, alpha)[0] if out else ""
        rows.append(row)
    return rows


def sweep_csv(dag: Dag, rows: list[dict]) -> str:
    out = dag.out_edges(dag.source)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["alpha", *out, "chosen"])
    for row in rows:
        writer.writerow([f"{row['alpha']:.12g}", *(f"{row[e]:.12g}" for e in out), row["chosen"]])
    return buf.getvalue()
