"""Rectangular automata with random clocks: loading, checks, enrollment, goals."""

from __future__ import annotations

import itertools
import json
import re
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .geometry import Polytope
from .geometry.rational import ONE, ZERO, to_q
from .stochastic import ContinuousDistribution, JointDensity, distribution_from_dict


class ModelError(ValueError):
    """Malformed model or goal input."""


Interval = tuple  # (lo, hi), each an mpq or None for an infinite end


def parse_interval(value, what: str = "interval") -> Interval:
    if value is None:
        return (None, None)
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ModelError(f"{what}: expected [lo, hi], got {value!r}")
        try:
            lo = None if value[0] is None else to_q(value[0])
            hi = None if value[1] is None else to_q(value[1])
        except (TypeError, ValueError) as exc:
            raise ModelError(f"{what}: {exc}") from None
        if lo is not None and hi is not None and lo > hi:
            raise ModelError(f"{what}: empty interval [{lo}, {hi}]")
        return (lo, hi)
    try:
        v = to_q(value)
    except (TypeError, ValueError) as exc:
        raise ModelError(f"{what}: {exc}") from None
    return (v, v)


def interval_to_json(iv: Interval):
    def one(v):
        if v is None:
            return None
        return int(v) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"

    return [one(iv[0]), one(iv[1])]


def _interval_subset(a: Interval, b: Interval) -> bool:
    lo_ok = b[0] is None or (a[0] is not None and a[0] >= b[0])
    hi_ok = b[1] is None or (a[1] is not None and a[1] <= b[1])
    return lo_ok and hi_ok


def box_to_polytope(box: Sequence[Interval], dims: Sequence[int], total: int) -> Polytope:
    rows = []
    for (lo, hi), d in zip(box, dims):
        if hi is not None:
            e = [ZERO] * total
            e[d] = ONE
            rows.append((e, hi))
        if lo is not None:
            e = [ZERO] * total
            e[d] = -ONE
            rows.append((e, -lo))
    return Polytope.from_constraints(total, rows)


def _box_covered(face: Sequence[Interval], boxes: Sequence[Sequence[Interval]]) -> bool:
    """Exact test whether the closed box ``face`` lies in the union of ``boxes``."""
    if not boxes:
        return False
    reps = []
    for i, (lo, hi) in enumerate(face):
        cuts = set()
        for b in boxes:
            for v in b[i]:
                if v is not None and (lo is None or v >= lo) and (hi is None or v <= hi):
                    cuts.add(v)
        if lo is not None:
            cuts.add(lo)
        if hi is not None:
            cuts.add(hi)
        cuts = sorted(cuts)
        pts = list(cuts)
        pts += [(a + b) / 2 for a, b in zip(cuts, cuts[1:])]
        if not cuts:
            pts = [ZERO]
        else:
            if lo is None:
                pts.append(cuts[0] - 1)
            if hi is None:
                pts.append(cuts[-1] + 1)
        reps.append(pts)
    for p in itertools.product(*reps):
        if not any(
            all((lo is None or v >= lo) and (hi is None or v <= hi) for v, (lo, hi) in zip(p, b))
            for b in boxes
        ):
            return False
    return True


# --------------------------------------------------------------------------- goals
_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:/\d+)?|\.\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op><=|>=|==|=|\+|-|\*))"
)


def _tokenize(text: str):
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ModelError(f"cannot parse {text!r} at position {pos}")
        kind = m.lastgroup
        out.append((kind, m.group(kind)))
        pos = m.end()
    return out


def _parse_side(tokens, variables):
    coeffs = {v: ZERO for v in variables}
    const = ZERO
    i = 0
    sign = ONE
    expect_term = True
    while i < len(tokens):
        kind, val = tokens[i]
        if kind == "op" and val in "+-" and expect_term:
            if val == "-":
                sign = -sign
            i += 1
            continue
        if not expect_term:
            if kind == "op" and val in "+-":
                sign = -ONE if val == "-" else ONE
                expect_term = True
                i += 1
                continue
            raise ModelError(f"unexpected token {val!r}")
        factor = ONE
        if kind == "num":
            factor = to_q(val)
            i += 1
            if i < len(tokens) and tokens[i] == ("op", "*"):
                i += 1
            if i < len(tokens) and tokens[i][0] == "name":
                kind, val = tokens[i]
            else:
                const += sign * factor
                sign, expect_term = ONE, False
                continue
        if kind != "name":
            raise ModelError(f"unexpected token {val!r}")
        if val not in coeffs:
            raise ModelError(f"unknown variable {val!r} (known: {', '.join(variables)})")
        coeffs[val] += sign * factor
        i += 1
        sign, expect_term = ONE, False
    if expect_term:
        raise ModelError("incomplete linear expression")
    return coeffs, const


def parse_constraint(text: str, variables: Sequence[str]):
    """Parse ``"<lin-expr> <= <lin-expr>"`` into rows ``(coeffs, rhs)`` meaning ``coeffs.x <= rhs``.

    ``>=`` and ``=`` are accepted as well; ``=`` yields two rows.
    """
    tokens = _tokenize(text)
    rel = [i for i, t in enumerate(tokens) if t[0] == "op" and t[1] in ("<=", ">=", "=", "==")]
    if len(rel) != 1:
        raise ModelError(f"constraint {text!r} needs exactly one of <=, >=, =")
    k = rel[0]
    lc, lk = _parse_side(tokens[:k], variables)
    rc, rk = _parse_side(tokens[k + 1 :], variables)
    coeffs = tuple(lc[v] - rc[v] for v in variables)
    rhs = rk - lk
    op = tokens[k][1]
    if op == "<=":
        return [(coeffs, rhs)]
    if op == ">=":
        return [(tuple(-c for c in coeffs), -rhs)]
    return [(coeffs, rhs), (tuple(-c for c in coeffs), -rhs)]


@dataclass(frozen=True)
class GoalSpecification:
    goal_locations: Optional[tuple]  # None means every location
    constraints: tuple  # rows over var_c
    var_c: tuple
    text: tuple = ()

    @classmethod
    def parse(cls, locations, constraints: Sequence[str], var_c: Sequence[str]) -> "GoalSpecification":
        rows = []
        for c in constraints:
            rows.extend(parse_constraint(c, var_c))
        locs = None
        if locations is not None:
            locs = tuple(locations)
            if "*" in locs:
                locs = None
        return cls(locs, tuple(rows), tuple(var_c), tuple(constraints))

    @property
    def goal_region(self) -> Polytope:
        return Polytope.from_constraints(len(self.var_c), self.constraints)

    def matches(self, location: str) -> bool:
        return self.goal_locations is None or location in self.goal_locations

    def region_in(self, total: int, dims: Sequence[int]) -> Polytope:
        """Goal region embedded in a larger space; other dimensions stay free."""
        return self.goal_region.embed(total, dims)


# --------------------------------------------------------------------------- model
@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    pre: tuple
    post: tuple
    reset: tuple = ()
    label: str = ""


@dataclass(frozen=True)
class StochasticEdge:
    source: str
    clock: str
    target: str


@dataclass(frozen=True)
class Violation:
    rule: str
    element: str
    message: str

    def __str__(self) -> str:
        return f"[{self.rule}] {self.element}: {self.message}"


@dataclass
class RarModel:
    name: str
    var_c: tuple
    var_r: tuple
    distr: dict
    locations: tuple
    inv: dict
    init: dict
    flow_c: dict
    flow_r: dict
    edges: tuple
    stochastic_edges: tuple
    goal: Optional[GoalSpecification] = None
    expiration_bounds: dict = field(default_factory=dict)
    global_clock: Optional[str] = None
    t_max: Optional[object] = None
    metadata: dict = field(default_factory=dict)

    @property
    def d_c(self) -> int:
        return len(self.var_c)


def _box(spec, var_c, what, default=(None, None)):
    if spec is None:
        spec = {}
    if not isinstance(spec, dict):
        raise ModelError(f"{what}: expected an object mapping variables to intervals")
    unknown = set(spec) - set(var_c)
    if unknown:
        raise ModelError(f"{what}: unknown variables {sorted(unknown)}")
    return tuple(
        parse_interval(spec[v], f"{what}.{v}") if v in spec else default for v in var_c
    )


def model_from_dict(doc: dict) -> RarModel:
    if not isinstance(doc, dict):
        raise ModelError("model document must be a JSON object")
    for key in ("variables", "locations"):
        if key not in doc:
            raise ModelError(f"missing top-level key {key!r}")
    var_c = tuple(doc["variables"])
    var_r = tuple(doc.get("clocks", []))
    if len(set(var_c) | set(var_r)) != len(var_c) + len(var_r):
        raise ModelError("variable and clock names must be distinct")
    dists_doc = doc.get("distributions", {})
    distr = {}
    for r in var_r:
        if r not in dists_doc:
            raise ModelError(f"clock {r!r} has no distribution")
        try:
            distr[r] = distribution_from_dict(dists_doc[r])
        except ValueError as exc:
            raise ModelError(f"distribution of {r!r}: {exc}") from None

    locs_doc = doc["locations"]
    if isinstance(locs_doc, list):
        locs_doc = {entry["name"]: entry for entry in locs_doc}
    locations = tuple(locs_doc)
    inv, init, flow_c, flow_r = {}, {}, {}, {}
    for name, ld in locs_doc.items():
        inv[name] = _box(ld.get("invariant"), var_c, f"{name}.invariant")
        init[name] = (
            _box(ld["initial"], var_c, f"{name}.initial") if ld.get("initial") is not None else None
        )
        flow_c[name] = _box(ld.get("flow"), var_c, f"{name}.flow", default=(ZERO, ZERO))
        rates = ld.get("clock_rates", {})
        unknown = set(rates) - set(var_r)
        if unknown:
            raise ModelError(f"{name}.clock_rates: unknown clocks {sorted(unknown)}")
        bits = []
        for r in var_r:
            b = rates.get(r, 0)
            if b not in (0, 1):
                raise ModelError(f"{name}.clock_rates.{r}: random clocks have rate 0 or 1")
            bits.append(int(b))
        flow_r[name] = tuple(bits)

    edges = []
    for k, ed in enumerate(doc.get("edges", [])):
        for key in ("source", "target"):
            if ed.get(key) not in inv:
                raise ModelError(f"edge {k}: unknown {key} {ed.get(key)!r}")
        pre = _box(ed.get("guard", ed.get("pre")), var_c, f"edge {k}.guard")
        reset = tuple(ed.get("reset", []))
        if set(reset) - set(var_c):
            raise ModelError(f"edge {k}: reset of unknown variables {sorted(set(reset) - set(var_c))}")
        if ed.get("post") is not None:
            post = _box(ed["post"], var_c, f"edge {k}.post")
        else:
            post = tuple((None, None) if v in reset else iv for v, iv in zip(var_c, pre))
        edges.append(Edge(ed["source"], ed["target"], pre, post, reset, ed.get("label", "")))

    sedges = []
    for k, ed in enumerate(doc.get("stochastic_edges", [])):
        if ed.get("source") not in inv or ed.get("target") not in inv:
            raise ModelError(f"stochastic edge {k}: unknown location")
        if ed.get("clock") not in var_r:
            raise ModelError(f"stochastic edge {k}: unknown clock {ed.get('clock')!r}")
        sedges.append(StochasticEdge(ed["source"], ed["clock"], ed["target"]))

    goal = None
    if doc.get("goal") is not None:
        g = doc["goal"]
        cons = g.get("constraints", [])
        if isinstance(cons, str):
            cons = [cons]
        goal = GoalSpecification.parse(g.get("locations"), cons, var_c)
        if goal.goal_locations is not None:
            bad = set(goal.goal_locations) - set(locations)
            if bad:
                raise ModelError(f"goal names unknown locations {sorted(bad)}")

    bounds = {}
    for r, b in doc.get("expiration_bounds", {}).items():
        if r not in var_r:
            raise ModelError(f"expiration bound for unknown clock {r!r}")
        if not isinstance(b, int) or b < 0:
            raise ModelError(f"expiration bound of {r!r} must be a nonnegative integer")
        bounds[r] = b
    gclock = doc.get("global_clock")
    if gclock is not None and gclock not in var_c:
        raise ModelError(f"global clock {gclock!r} is not a continuous variable")
    t_max = doc.get("t_max")
    if t_max is not None:
        t_max = to_q(t_max)
    return RarModel(
        name=doc.get("name", "model"),
        var_c=var_c,
        var_r=var_r,
        distr=distr,
        locations=locations,
        inv=inv,
        init=init,
        flow_c=flow_c,
        flow_r=flow_r,
        edges=tuple(edges),
        stochastic_edges=tuple(sedges),
        goal=goal,
        expiration_bounds=bounds,
        global_clock=gclock,
        t_max=t_max,
        metadata=doc.get("metadata", {}),
    )


def load_model(path) -> RarModel:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ModelError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: invalid JSON ({exc})") from None
    return model_from_dict(doc)


# --------------------------------------------------------------------------- checks
def validate(m: RarModel) -> list:
    """Structural conditions on the automaton; an empty list means well-formed."""
    out: list = []
    for k, e in enumerate(m.edges):
        tag = f"edge {k} ({e.source}->{e.target})"
        for x, a, b in zip(m.var_c, e.pre, e.post):
            if x not in e.reset and a != b:
                out.append(Violation("ra-pre-post", tag, f"pre and post differ on non-reset {x}"))
        # unconstrained post components keep their value and are checked by the
        # target invariant when the jump fires; only constrained ones must fit
        for x, p, iv in zip(m.var_c, e.post, m.inv[e.target]):
            if p != (None, None) and not _interval_subset(p, iv):
                out.append(
                    Violation("ra-post-invariant", tag, f"post of {x} leaves Inv({e.target})")
                )
        if e.reset:
            out.append(
                Violation(
                    "analyzer-reset-unsupported",
                    tag,
                    f"resets of {', '.join(e.reset)} are not supported by the analysis",
                )
            )

    for loc in m.locations:
        guards = [e.pre for e in m.edges if e.source == loc]
        inv = m.inv[loc]
        for i, x in enumerate(m.var_c):
            lo, hi = inv[i]
            flo, fhi = m.flow_c[loc][i]
            for bound, side, moves in (
                (lo, "lower", flo is None or flo < 0),
                (hi, "upper", fhi is None or fhi > 0),
            ):
                if bound is None or not moves:
                    continue
                face = list(inv)
                face[i] = (bound, bound)
                if not _box_covered(face, guards):
                    out.append(
                        Violation(
                            "ra-nonblocking",
                            f"location {loc}",
                            f"{side} bound {x}={bound} reachable under flow but not covered by outgoing guards",
                        )
                    )

    for loc in m.locations:
        clocks = [s.clock for s in m.stochastic_edges if s.source == loc]
        for r in set(clocks):
            if clocks.count(r) > 1:
                out.append(
                    Violation("rar-distinct-clocks", f"location {loc}", f"several stochastic jumps on clock {r}")
                )
        for r, bit in zip(m.var_r, m.flow_r[loc]):
            if bit and r not in clocks:
                out.append(
                    Violation("rar-active-clock-jump", f"location {loc}", f"active clock {r} has no stochastic jump")
                )
    for k, s in enumerate(m.stochastic_edges):
        if not all(_interval_subset(a, b) for a, b in zip(m.inv[s.source], m.inv[s.target])):
            out.append(
                Violation(
                    "rar-invariant-inclusion",
                    f"stochastic edge {k} ({s.source}-{s.clock}->{s.target})",
                    f"Inv({s.source}) is not contained in Inv({s.target})",
                )
            )
    if not any(b is not None for b in m.init.values()):
        out.append(Violation("ra-initial", "model", "no location has an initial set"))
    return out


# --------------------------------------------------------------------------- enrollment
class EnrollmentError(ModelError):
    pass


@dataclass(frozen=True)
class DelayVariable:
    name: str
    clock: str
    index: int
    distribution: ContinuousDistribution
    dim: int


@dataclass(frozen=True)
class EnrolledLocation:
    name: str
    base: str
    counts: tuple
    invariant: Polytope
    flow: tuple
    init: Optional[Polytope]


@dataclass(frozen=True)
class EnrolledEdge:
    index: int
    source: str
    target: str
    kind: str  # "discrete" or "stochastic"
    label: str
    guard: Polytope
    reset: tuple = ()
    clock: Optional[str] = None
    delay: Optional[int] = None  # registry index of the expiring delay


@dataclass
class EnrolledModel:
    source: RarModel
    var_names: tuple
    var_c_dims: tuple
    global_dim: Optional[int]
    delays: tuple
    locations: dict
    edges: tuple
    expiration_bound: dict
    t_max: Optional[object]

    @property
    def dim(self) -> int:
        return len(self.var_names)

    @property
    def d_r(self) -> int:
        return len(self.delays)

    @property
    def delay_dims(self) -> tuple:
        return tuple(d.dim for d in self.delays)

    def out_edges(self, loc: str):
        return [e for e in self.edges if e.source == loc]

    def joint_density(self) -> JointDensity:
        return JointDensity([d.distribution for d in self.delays])

    def initial_locations(self):
        return [l for l in self.locations.values() if l.init is not None]


def _loc_name(base: str, counts: tuple, var_r: tuple) -> str:
    if not var_r or not any(counts):
        return base
    tag = ",".join(f"{r}{n}" for r, n in zip(var_r, counts) if n)
    return f"{base}[{tag}]"


def enroll(m: RarModel, expiration_bound: Optional[dict] = None, t_max=None) -> EnrolledModel:
    """Unroll random clocks into one delay variable per expiration.

    A location whose active clock has used up its expiration bound is dropped
    together with every jump into it, which truncates the automaton.
    """
    bounds = dict(m.expiration_bounds)
    if expiration_bound:
        bounds.update(expiration_bound)
    for r in m.var_r:
        bounds.setdefault(r, 1)
    t_max = m.t_max if t_max is None else to_q(t_max)

    # clocks that can become active from an initial location
    reach = set(l for l in m.locations if m.init[l] is not None)
    todo = deque(reach)
    while todo:
        l = todo.popleft()
        succ = [e.target for e in m.edges if e.source == l]
        succ += [s.target for s in m.stochastic_edges if s.source == l]
        for t in succ:
            if t not in reach:
                reach.add(t)
                todo.append(t)
    for r in m.var_r:
        if bounds[r] == 0:
            for s in m.stochastic_edges:
                if s.clock == r and s.source in reach:
                    raise EnrollmentError(
                        f"clock {r!r} has expiration bound 0 but a reachable stochastic jump from {s.source!r}"
                    )

    names = list(m.var_c)
    var_c_dims = tuple(range(len(m.var_c)))
    global_dim = None
    if m.global_clock is not None:
        global_dim = m.var_c.index(m.global_clock)
    elif t_max is not None:
        global_dim = len(names)
        names.append("g")
    delays = []
    for r in m.var_r:
        for n in range(bounds[r]):
            delays.append(DelayVariable(f"{r}_{n}", r, n, m.distr[r], len(names)))
            names.append(f"{r}_{n}")
    total = len(names)
    delay_of = {(d.clock, d.index): k for k, d in enumerate(delays)}
    ridx = {r: i for i, r in enumerate(m.var_r)}

    def valid(base, counts):
        return all(
            not (bit and counts[i] >= bounds[r])
            for i, (r, bit) in enumerate(zip(m.var_r, m.flow_r[base]))
        )

    def make_loc(base, counts):
        inv = box_to_polytope(m.inv[base], var_c_dims, total)
        if t_max is not None:
            e = [ZERO] * total
            e[global_dim] = ONE
            inv = inv.add_constraints([(e, t_max)])
        flow = [None] * total
        for d, iv in zip(var_c_dims, m.flow_c[base]):
            flow[d] = iv
        if global_dim is not None and m.global_clock is None:
            flow[global_dim] = (ONE, ONE)
        for d in delays:
            i = ridx[d.clock]
            on = m.flow_r[base][i] == 1 and counts[i] == d.index
            flow[d.dim] = (ONE, ONE) if on else (ZERO, ZERO)
        init = None
        if m.init[base] is not None and not any(counts):
            init = box_to_polytope(m.init[base], var_c_dims, total)
            fixed = [d.dim for d in delays]
            if global_dim is not None and m.global_clock is None:
                fixed.append(global_dim)
            init = init.add_constraints(
                [(tuple(ONE if j == d else ZERO for j in range(total)), ZERO) for d in fixed]
                + [(tuple(-ONE if j == d else ZERO for j in range(total)), ZERO) for d in fixed]
            )
            init = init.intersect(inv)
        return EnrolledLocation(_loc_name(base, counts, m.var_r), base, counts, inv, tuple(flow), init)

    zero = tuple(0 for _ in m.var_r)
    locs: dict = {}
    edges: list = []
    order = [(l, zero) for l in m.locations if m.init[l] is not None and valid(l, zero)]
    seen = set(order)
    todo = deque(order)
    while todo:
        base, counts = todo.popleft()
        src = make_loc(base, counts)
        locs[src.name] = src
        succ = []
        for k, e in enumerate(m.edges):
            if e.source != base:
                continue
            guard = box_to_polytope(e.pre, var_c_dims, total)
            if not e.reset:
                guard = guard.intersect(box_to_polytope(e.post, var_c_dims, total))
            label = e.label or f"e{k}"
            succ.append(((e.target, counts), "discrete", label, guard, e.reset, None, None))
        for k, s in enumerate(m.stochastic_edges):
            if s.source != base:
                continue
            i = ridx[s.clock]
            if counts[i] >= bounds[s.clock]:
                continue
            nxt = counts[:i] + (counts[i] + 1,) + counts[i + 1 :]
            label = f"{s.clock}_{counts[i]}"
            succ.append(
                ((s.target, nxt), "stochastic", label, Polytope.universe(total), (), s.clock,
                 delay_of[(s.clock, counts[i])])
            )
        for (tb, tc), kind, label, guard, reset, clock, delay in succ:
            if not valid(tb, tc):
                continue
            tname = _loc_name(tb, tc, m.var_r)
            edges.append(
                EnrolledEdge(len(edges), src.name, tname, kind, label, guard, tuple(reset), clock, delay)
            )
            if (tb, tc) not in seen:
                seen.add((tb, tc))
                todo.append((tb, tc))
    return EnrolledModel(
        source=m,
        var_names=tuple(names),
        var_c_dims=var_c_dims,
        global_dim=global_dim,
        delays=tuple(delays),
        locations=locs,
        edges=tuple(edges),
        expiration_bound={r: bounds[r] for r in m.var_r},
        t_max=t_max,
    )
