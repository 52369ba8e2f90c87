"""Exact convex polyhedra in H-representation.

Every constructor except the raw dataclass one returns a canonical form: the
affine hull as reduced-row-echelon equalities (stored as <= pairs), the
remaining inequalities rewritten over the non-pivot coordinates, redundancy
removed, every row scaled to coprime integers and the list sorted. Two
canonical polytopes of the same dimension are equal as dataclasses iff they
are equal as sets.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import lp
from .dd import extreme_rays
from .rational import ONE, ZERO, Q, dot, integer_row, normalize_row, rref, to_q

FLOAT_TOL = 1e-9


class GeometryError(ValueError):
    pass


def _direction(a, b):
    """Scale a row so its coefficient vector is a primitive integer vector."""
    ints = integer_row(list(a))
    g = 0
    for v in ints:
        g = math.gcd(g, v)
    if g == 0:
        return None, b
    den = 1
    for v in a:
        den = math.lcm(den, int(v.denominator))
    scale = Q(den, g)
    return tuple(Q(v // g) for v in ints), b * scale


def _collect(rows) -> Optional[dict]:
    """Direction -> tightest rhs. ``None`` signals a trivially violated row."""
    out: dict = {}
    for a, b in rows:
        d, r = _direction([to_q(v) for v in a], to_q(b))
        if d is None:
            if r < 0:
                return None
            continue
        prev = out.get(d)
        if prev is None or r < prev:
            out[d] = r
    return out


def _implicit_equalities(dim, ineqs):
    """Indices of rows tight on the whole set, or ``None`` when infeasible."""
    m = len(ineqs)
    undecided = list(range(m))
    while undecided:
        slot = {j: k for k, j in enumerate(undecided)}
        nvar = dim + len(undecided)
        A, b = [], []
        for i, (a, r) in enumerate(ineqs):
            row = list(a) + [ZERO] * len(undecided)
            if i in slot:
                row[dim + slot[i]] = ONE
            A.append(row)
            b.append(r)
        for k in range(len(undecided)):
            up = [ZERO] * nvar
            up[dim + k] = ONE
            A.append(up)
            b.append(ONE)
            lo = [ZERO] * nvar
            lo[dim + k] = -ONE
            A.append(lo)
            b.append(ZERO)
        c = [ZERO] * dim + [ONE] * len(undecided)
        res = lp.maximize(c, A, b)
        if res.status == lp.INFEASIBLE:
            return None
        loose = [j for j in undecided if res.x[dim + slot[j]] > 0]
        if not loose:
            return set(undecided)
        undecided = [j for j in undecided if j not in set(loose)]
    return set()


def _drop_redundant(ineqs, cols):
    """Sequential LP redundancy removal restricted to coordinates ``cols``."""
    kept = [(tuple(a[c] for c in cols), b, (a, b)) for a, b in ineqs]
    i = 0
    while i < len(kept):
        a, b, _ = kept[i]
        others = kept[:i] + kept[i + 1 :]
        res = lp.maximize(a, [o[0] for o in others], [o[1] for o in others])
        if res.status == lp.OPTIMAL and res.value <= b:
            kept.pop(i)
        else:
            i += 1
    return [k[2] for k in kept]


def _empty_rows(dim):
    return ((tuple(ZERO for _ in range(dim)), -ONE),)


def _assemble(dim, eqs, ineqs, reduce: bool):
    """Canonical rows from equalities ``a.x = b`` and inequalities ``a.x <= b``."""
    pivots: list[int] = []
    eq_rows: list = []
    if eqs:
        mat, pivots = rref([list(a) + [b] for a, b in eqs])
        if dim in pivots:
            return None
        eq_rows = [(tuple(r[:dim]), r[dim]) for r in mat]
    subst = []
    for a, b in ineqs:
        a = list(a)
        for (e, f), p in zip(eq_rows, pivots):
            k = a[p]
            if k != 0:
                a = [x - k * y for x, y in zip(a, e)]
                b = b - k * f
        subst.append((a, b))
    grouped = _collect(subst)
    if grouped is None:
        return None
    rows = list(grouped.items())
    if reduce and len(rows) > 1:
        free = [c for c in range(dim) if c not in set(pivots)]
        rows = _drop_redundant(rows, free)
    out = []
    for e, f in eq_rows:
        a, b = normalize_row(e, f)
        out.append((a, b))
        out.append((tuple(-v for v in a), -b))
    for a, b in rows:
        out.append(normalize_row(a, b))
    out.sort()
    return tuple(out)


def _canonicalize(dim, rows):
    grouped = _collect(rows)
    if grouped is None:
        return _empty_rows(dim)
    ineqs = list(grouped.items())
    if not ineqs:
        return ()
    tight = _implicit_equalities(dim, ineqs)
    if tight is None:
        return _empty_rows(dim)
    eqs = [ineqs[i] for i in sorted(tight)]
    rest = [r for i, r in enumerate(ineqs) if i not in tight]
    out = _assemble(dim, eqs, rest, reduce=True)
    return _empty_rows(dim) if out is None else out


def _as_rows(dim, constraints):
    rows = []
    for a, b in constraints:
        a = tuple(to_q(v) for v in a)
        if len(a) != dim:
            raise GeometryError(f"coefficient vector of length {len(a)} in dimension {dim}")
        rows.append((a, to_q(b)))
    return rows


@dataclass(frozen=True)
class VertexRepresentation:
    vertices: tuple
    rays: tuple = ()


@dataclass(frozen=True)
class FlowCone:
    generators: tuple

    @classmethod
    def from_box(cls, flow: Sequence[tuple], negate: bool = False) -> "FlowCone":
        """Generators of ``{t*rate | t >= 0, rate in box}``.

        Finite box corners plus unit rays along unbounded sides; zero vectors
        are dropped.
        """
        values, rays = [], []
        n = len(flow)
        for i, (lo, hi) in enumerate(flow):
            lo = None if lo is None else to_q(lo)
            hi = None if hi is None else to_q(hi)
            cands = sorted({v for v in (lo, hi) if v is not None}) or [ZERO]
            values.append(cands)
            if hi is None:
                rays.append(tuple(ONE if j == i else ZERO for j in range(n)))
            if lo is None:
                rays.append(tuple(-ONE if j == i else ZERO for j in range(n)))
        gens = set()
        for corner in itertools.product(*values):
            gens.add(tuple(corner))
        gens.update(rays)
        sign = -1 if negate else 1
        out = sorted(tuple(sign * v for v in g) for g in gens if any(g))
        return cls(tuple(out))

    def contains(self, direction) -> bool:
        """Membership by nonnegative-combination solvability."""
        d = [to_q(v) for v in direction]
        k = len(self.generators)
        if k == 0:
            return all(v == 0 for v in d)
        A, b = [], []
        for i in range(len(d)):
            row = [g[i] for g in self.generators]
            A.append(row)
            b.append(d[i])
            A.append([-v for v in row])
            b.append(-d[i])
        for j in range(k):
            A.append([-ONE if jj == j else ZERO for jj in range(k)])
            b.append(ZERO)
        return lp.feasible_point(A, b, k) is not None


@dataclass(frozen=True)
class Polytope:
    dim: int
    constraints: tuple
    canonical: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.dim < 0:
            raise GeometryError("negative dimension")
        for a, _ in self.constraints:
            if len(a) != self.dim:
                raise GeometryError("coefficient vector length differs from dim")

    # constructors -------------------------------------------------------
    @classmethod
    def from_constraints(cls, dim: int, constraints: Iterable) -> "Polytope":
        rows = _as_rows(dim, constraints)
        return cls(dim, _canonicalize(dim, rows), True)

    @classmethod
    def universe(cls, dim: int) -> "Polytope":
        return cls(dim, (), True)

    @classmethod
    def empty(cls, dim: int) -> "Polytope":
        return cls(dim, _empty_rows(dim), True)

    @classmethod
    def box(cls, bounds: Sequence[tuple]) -> "Polytope":
        """Axis box from ``(lo, hi)`` pairs; ``None`` means unbounded."""
        dim = len(bounds)
        rows = []
        for i, (lo, hi) in enumerate(bounds):
            e = [ZERO] * dim
            if hi is not None:
                e[i] = ONE
                rows.append((tuple(e), to_q(hi)))
            if lo is not None:
                e = [ZERO] * dim
                e[i] = -ONE
                rows.append((tuple(e), -to_q(lo)))
        return cls.from_constraints(dim, rows)

    @classmethod
    def point(cls, coords: Sequence) -> "Polytope":
        c = [to_q(v) for v in coords]
        return cls.box([(v, v) for v in c])

    # queries ------------------------------------------------------------
    def canon(self) -> "Polytope":
        if self.canonical:
            return self
        return Polytope.from_constraints(self.dim, self.constraints)

    def is_empty(self) -> bool:
        if self.canonical:
            return self.constraints == _empty_rows(self.dim)
        return lp.feasible_point(
            [a for a, _ in self.constraints], [b for _, b in self.constraints], self.dim
        ) is None

    def is_universe(self) -> bool:
        return len(self.canon().constraints) == 0

    def equalities(self):
        """Equality rows ``a.x = b`` present as <= pairs."""
        rows = set(self.constraints)
        out = []
        for a, b in self.constraints:
            neg = (tuple(-v for v in a), -b)
            if neg in rows and (a, b) > neg:
                out.append((a, b))
        return out

    def contains_point(self, v: Sequence, tol: float = FLOAT_TOL) -> bool:
        if len(v) != self.dim:
            raise GeometryError("point length differs from dim")
        if all(not isinstance(x, float) and not isinstance(x, np.floating) for x in v):
            q = [to_q(x) for x in v]
            return all(dot(a, q) <= b for a, b in self.constraints)
        A, b = self.float_arrays()
        if A.shape[0] == 0:
            return True
        x = np.asarray(v, dtype=float)
        return bool(np.all(b - A @ x >= -tol))

    def float_arrays(self):
        if not self.constraints:
            return np.zeros((0, self.dim)), np.zeros(0)
        A = np.array([[float(c) for c in a] for a, _ in self.constraints], dtype=float)
        b = np.array([float(r) for _, r in self.constraints], dtype=float)
        return A, b

    def feasible_point(self):
        return lp.feasible_point(
            [a for a, _ in self.constraints], [b for _, b in self.constraints], self.dim
        )

    def maximize(self, c: Sequence) -> lp.LPResult:
        return lp.maximize(
            [to_q(v) for v in c],
            [a for a, _ in self.constraints],
            [b for _, b in self.constraints],
        )

    def bounds(self, i: int):
        """Exact ``(lo, hi)`` of coordinate ``i`` (``None`` when unbounded)."""
        e = [ZERO] * self.dim
        e[i] = ONE
        hi = self.maximize(e)
        e[i] = -ONE
        lo = self.maximize(e)
        if hi.status == lp.INFEASIBLE:
            raise GeometryError("bounds of an empty polytope")
        return (
            None if lo.status == lp.UNBOUNDED else -lo.value,
            None if hi.status == lp.UNBOUNDED else hi.value,
        )

    def is_subset(self, other: "Polytope") -> bool:
        _check_dim(self, other)
        if self.is_empty():
            return True
        if other.is_empty():
            return False
        for a, b in other.constraints:
            res = self.maximize(a)
            if res.status != lp.OPTIMAL or res.value > b:
                return False
        return True

    def same_set(self, other: "Polytope") -> bool:
        return self.is_subset(other) and other.is_subset(self)

    # operations ---------------------------------------------------------
    def intersect(self, other: "Polytope") -> "Polytope":
        _check_dim(self, other)
        return Polytope.from_constraints(self.dim, self.constraints + other.constraints)

    def add_constraints(self, rows: Iterable) -> "Polytope":
        return Polytope.from_constraints(self.dim, self.constraints + tuple(_as_rows(self.dim, rows)))

    def remove_redundancy(self) -> "Polytope":
        return self.canon()

    def project(self, keep: Sequence[int]) -> "Polytope":
        keep = list(keep)
        if not keep:
            raise GeometryError("projection needs at least one kept dimension")
        if any(k < 0 or k >= self.dim for k in keep):
            raise GeometryError("projection index out of range")
        if self.is_empty():
            return Polytope.empty(len(keep))
        rows = list(self.canon().constraints)
        drop = [d for d in range(self.dim) if d not in set(keep)]
        while drop:
            d = min(drop, key=lambda j: _elimination_cost(rows, j))
            drop.remove(d)
            rows = _eliminate(rows, d)
            canon = _canonicalize(self.dim, rows)
            if canon == _empty_rows(self.dim):
                return Polytope.empty(len(keep))
            rows = list(canon)
        out = [(tuple(a[k] for k in keep), b) for a, b in rows]
        return Polytope.from_constraints(len(keep), out)

    def lift(self, d: int) -> "Polytope":
        """``{v + c*e_d | v in self, c >= 0}``."""
        if self.is_empty():
            return self
        n = self.dim
        rows = [(tuple(a) + (-a[d],), b) for a, b in self.canon().constraints]
        rows.append((tuple([ZERO] * n) + (-ONE,), ZERO))
        rows = _eliminate(rows, n)
        return Polytope.from_constraints(n, [(a[:n], b) for a, b in rows])

    def embed(self, new_dim: int, mapping: Sequence[int]) -> "Polytope":
        """Place coordinate ``i`` at ``mapping[i]`` of a ``new_dim`` space, rest free."""
        rows = []
        for a, b in self.constraints:
            na = [ZERO] * new_dim
            for i, v in enumerate(a):
                na[mapping[i]] += v
            rows.append((tuple(na), b))
        return Polytope.from_constraints(new_dim, rows)

    def to_vertices(self) -> VertexRepresentation:
        verts, rays, lines = _h_to_v(self)
        rays = list(rays) + list(lines) + [tuple(-v for v in l) for l in lines]
        return VertexRepresentation(tuple(verts), tuple(rays))

    @classmethod
    def from_vertices(cls, vr: VertexRepresentation, dim: Optional[int] = None) -> "Polytope":
        verts = [tuple(to_q(v) for v in p) for p in vr.vertices]
        rays = [tuple(to_q(v) for v in r) for r in vr.rays]
        if dim is None:
            if not verts:
                raise GeometryError("vertex representation needs at least one vertex")
            dim = len(verts[0])
        return _v_to_h(dim, verts, rays)

    def to_text(self, names: Optional[Sequence[str]] = None) -> str:
        names = list(names) if names else [f"x{i + 1}" for i in range(self.dim)]
        lines = ["# dims: " + " ".join(names)]
        for a, b in self.constraints:
            a, b = normalize_row(a, b)
            terms = []
            for c, nm in zip(a, names):
                if c == 0:
                    continue
                c = int(c)
                if not terms:
                    terms.append(f"{c}*{nm}")
                else:
                    terms.append(f"{'-' if c < 0 else '+'} {abs(c)}*{nm}")
            lhs = " ".join(terms) if terms else "0"
            lines.append(f"{lhs} <= {int(b)}")
        return "\n".join(lines) + "\n"

    def __str__(self) -> str:
        return self.to_text()


def _check_dim(p: Polytope, q: Polytope):
    if p.dim != q.dim:
        raise GeometryError(f"dimension mismatch: {p.dim} vs {q.dim}")


def _equality_with(rows, j):
    present = set(rows)
    best = None
    for a, b in rows:
        if a[j] != 0 and (tuple(-v for v in a), -b) in present:
            nz = sum(1 for v in a if v != 0)
            if best is None or nz < best[0]:
                best = (nz, (a, b))
    return None if best is None else best[1]


def _elimination_cost(rows, j):
    if _equality_with(rows, j) is not None:
        return -1
    pos = sum(1 for a, _ in rows if a[j] > 0)
    neg = sum(1 for a, _ in rows if a[j] < 0)
    return pos * neg - pos - neg


def _eliminate(rows, j):
    """Existentially eliminate coordinate ``j`` (its column becomes zero)."""
    eq = _equality_with(rows, j)
    if eq is not None:
        e, f = eq
        ej = e[j]
        out = []
        for a, b in rows:
            k = a[j]
            if k != 0:
                a = tuple(x - (k / ej) * y for x, y in zip(a, e))
                b = b - (k / ej) * f
            out.append((a, b))
        return out
    pos = [(a, b) for a, b in rows if a[j] > 0]
    neg = [(a, b) for a, b in rows if a[j] < 0]
    out = [(a, b) for a, b in rows if a[j] == 0]
    for ap, bp in pos:
        for an, bn in neg:
            lp_, ln = -an[j], ap[j]
            out.append(
                (tuple(lp_ * x + ln * y for x, y in zip(ap, an)), lp_ * bp + ln * bn)
            )
    return out


def _h_to_v(p: Polytope):
    p = p.canon()
    if p.is_empty():
        raise GeometryError("empty polytope has no vertex representation")
    n = p.dim
    rows = [tuple([0] * n + [-1])]
    for a, b in p.constraints:
        rows.append(tuple(integer_row(list(a) + [-b])))
    lines, rays = extreme_rays(rows, n + 1)
    verts, dirs = [], []
    for r in rays:
        t = r[n]
        if t > 0:
            verts.append(tuple(Q(v, t) for v in r[:n]))
        else:
            dirs.append(tuple(Q(v) for v in r[:n]))
    lins = [tuple(Q(v) for v in l[:n]) for l in lines]
    verts.sort()
    dirs.sort()
    return verts, dirs, lins


def _v_to_h(dim, verts, rays):
    if not verts:
        return Polytope.empty(dim)
    gens = []
    for v in verts:
        gens.append(tuple(integer_row(list(v) + [ONE])))
    for r in rays:
        if any(r):
            gens.append(tuple(integer_row(list(r) + [ZERO])))
    lines, facets = extreme_rays(gens, dim + 1)
    eqs = [(tuple(Q(v) for v in h[:dim]), Q(-h[dim])) for h in lines]
    ineqs = [(tuple(Q(v) for v in h[:dim]), Q(-h[dim])) for h in facets]
    out = _assemble(dim, eqs, ineqs, reduce=False)
    if out is None:
        return Polytope.empty(dim)
    return Polytope(dim, out, True)


def minkowski_cone(p: Polytope, generators: Sequence) -> Polytope:
    """``p + cone(generators)`` through the vertex representation."""
    if p.is_empty():
        return p
    if not generators:
        return p.canon()
    verts, rays, lines = _h_to_v(p)
    rays = list(rays) + list(lines) + [tuple(-v for v in l) for l in lines]
    rays += [tuple(to_q(v) for v in g) for g in generators]
    return _v_to_h(p.dim, verts, rays)


def time_elapse(
    p: Polytope,
    flow: Sequence[tuple],
    invariant: Optional[Polytope] = None,
    direction: str = "forward",
) -> Polytope:
    """Forward or backward time closure of ``p`` under a rectangular flow."""
    if len(flow) != p.dim:
        raise GeometryError("flow needs one interval per dimension")
    if direction not in ("forward", "backward"):
        raise GeometryError(f"unknown direction {direction!r}")
    if invariant is None:
        invariant = Polytope.universe(p.dim)
    _check_dim(p, invariant)
    if p.is_empty():
        return Polytope.empty(p.dim)
    cone = FlowCone.from_box(flow, negate=direction == "backward")
    return minkowski_cone(p, cone.generators).intersect(invariant)


# module-level aliases mirroring the operation names -------------------------
def intersect(p: Polytope, q: Polytope) -> Polytope:
    return p.intersect(q)


def is_empty(p: Polytope) -> bool:
    return p.is_empty()


def contains_point(p: Polytope, v, tol: float = FLOAT_TOL) -> bool:
    return p.contains_point(v, tol)


def project(p: Polytope, keep: Sequence[int]) -> Polytope:
    return p.project(keep)


def lift(p: Polytope, d: int) -> Polytope:
    return p.lift(d)


def to_vertices(p: Polytope) -> VertexRepresentation:
    return p.to_vertices()


def from_vertices(vr: VertexRepresentation, dim: Optional[int] = None) -> Polytope:
    return Polytope.from_vertices(vr, dim)


def remove_redundancy(p: Polytope) -> Polytope:
    return p.remove_redundancy()
