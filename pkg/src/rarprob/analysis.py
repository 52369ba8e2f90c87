"""Forward flowpipe, goal traces, backward refinement and sample-domain extraction."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .geometry import Polytope, time_elapse
from .geometry.rational import ONE, ZERO
from .model import EnrolledEdge, EnrolledModel, GoalSpecification

log = logging.getLogger(__name__)


class InternalConsistencyError(RuntimeError):
    """A set that forward reachability guarantees nonempty came out empty."""


@dataclass(frozen=True)
class ReachNode:
    id: int
    location: str
    base: str
    segment: Polytope
    parent: Optional[int]
    edge: Optional[EnrolledEdge]
    depth: int


@dataclass
class ReachTree:
    nodes: list
    roots: list
    var_names: tuple
    warnings: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.nodes)

    def children(self, nid: int):
        return [n for n in self.nodes if n.parent == nid]

    def path_to(self, nid: int) -> list:
        path = []
        cur: Optional[int] = nid
        while cur is not None:
            path.append(cur)
            cur = self.nodes[cur].parent
        return path[::-1]

    def to_dict(self) -> dict:
        return {
            "variables": list(self.var_names),
            "roots": list(self.roots),
            "warnings": list(self.warnings),
            "nodes": [
                {
                    "id": n.id,
                    "location": n.location,
                    "base_location": n.base,
                    "parent": n.parent,
                    "depth": n.depth,
                    "jump": None
                    if n.edge is None
                    else {"kind": n.edge.kind, "label": n.edge.label},
                    "constraints": n.segment.to_text(self.var_names).splitlines()[1:],
                }
                for n in self.nodes
            ],
            "edges": [
                {"parent": n.parent, "child": n.id, "kind": n.edge.kind, "label": n.edge.label}
                for n in self.nodes
                if n.parent is not None
            ],
        }


def jump_successor(seg: Polytope, edge: EnrolledEdge, em: EnrolledModel) -> Polytope:
    """Image of a jump. Without resets it is the identity restricted to the guard."""
    if edge.reset:
        raise NotImplementedError("jumps with resets are not supported by the analysis")
    target = em.locations[edge.target]
    return seg.intersect(edge.guard).intersect(target.invariant)


def jump_predecessor(seg: Polytope, edge: EnrolledEdge) -> Polytope:
    if edge.reset:
        raise NotImplementedError("jumps with resets are not supported by the analysis")
    return seg.intersect(edge.guard)


def forward_flowpipe(em: EnrolledModel, jump_bound: int = 50) -> ReachTree:
    """Breadth-first alternation of time closure and jump successors."""
    if any(e.reset for e in em.edges):
        raise NotImplementedError("jumps with resets are not supported by the analysis")
    nodes: list = []
    roots: list = []
    warnings: list = []
    todo: deque = deque()
    for loc in em.initial_locations():
        if loc.init.is_empty():
            continue
        seg = time_elapse(loc.init, loc.flow, loc.invariant, "forward")
        node = ReachNode(len(nodes), loc.name, loc.base, seg, None, None, 0)
        nodes.append(node)
        roots.append(node.id)
        todo.append(node)
    truncated = 0
    while todo:
        node = todo.popleft()
        for edge in em.out_edges(node.location):
            pre = jump_successor(node.segment, edge, em)
            if pre.is_empty():
                continue
            if node.depth >= jump_bound:
                truncated += 1
                continue
            target = em.locations[edge.target]
            seg = time_elapse(pre, target.flow, target.invariant, "forward")
            child = ReachNode(len(nodes), target.name, target.base, seg, node.id, edge, node.depth + 1)
            nodes.append(child)
            todo.append(child)
    if truncated:
        msg = f"jump bound {jump_bound} reached with {truncated} enabled jumps left unexplored"
        log.warning(msg)
        warnings.append(msg)
    return ReachTree(nodes, roots, em.var_names, warnings)


@dataclass(frozen=True)
class GoalTrace:
    index: int
    path: tuple  # node ids root -> goal node
    goal_set: Polytope  # V_i
    forward_segments: tuple  # V_k, k = 0 at the goal node

    @property
    def goal_node(self) -> int:
        return self.path[-1]


def collect_goal_traces(tree: ReachTree, goal: GoalSpecification, em: EnrolledModel) -> list:
    region = goal.region_in(em.dim, em.var_c_dims)
    traces = []
    for node in tree.nodes:
        if not goal.matches(node.base):
            continue
        v = node.segment.intersect(region)
        if v.is_empty():
            continue
        path = tuple(tree.path_to(node.id))
        segs = tuple(tree.nodes[n].segment for n in reversed(path))
        traces.append(GoalTrace(len(traces), path, v, segs))
    return traces


@dataclass(frozen=True)
class TraceRefinement:
    trace: GoalTrace
    refined_segments: tuple  # \hat V_k
    intermediate_goals: tuple  # J_k, J_0 = V_i, last entry intersected with Init
    expiration_map: dict  # backward step k -> registry index of the expiring delay


def refine_trace(tree: ReachTree, trace: GoalTrace, em: EnrolledModel) -> TraceRefinement:
    path = list(reversed(trace.path))  # k = 0 at the goal node
    js = [trace.goal_set]
    refined = []
    expiry = {}
    for k, nid in enumerate(path):
        node = tree.nodes[nid]
        loc = em.locations[node.location]
        vk = trace.forward_segments[k]
        hat = time_elapse(js[k], loc.flow, loc.invariant, "backward").intersect(vk)
        if hat.is_empty():
            raise InternalConsistencyError(f"trace {trace.index}: empty refined segment at step {k}")
        refined.append(hat)
        if node.parent is None:
            nxt = hat.intersect(loc.init)
        else:
            nxt = jump_predecessor(hat, node.edge).intersect(trace.forward_segments[k + 1])
            if node.edge.kind == "stochastic":
                expiry[k + 1] = node.edge.delay
        if nxt.is_empty():
            raise InternalConsistencyError(f"trace {trace.index}: empty intermediate goal at step {k + 1}")
        js.append(nxt)
    return TraceRefinement(trace, tuple(refined), tuple(js), expiry)


def _delay_piece(seg: Polytope, em: EnrolledModel, keep_fixed: Sequence[int]) -> Polytope:
    """Project onto the delays and lift every delay not listed in ``keep_fixed``."""
    p = seg.project(em.delay_dims)
    for j in range(em.d_r):
        if j not in keep_fixed:
            p = p.lift(j)
    return p


def nonnegative_orthant(d: int) -> Polytope:
    return Polytope.box([(ZERO, None)] * d)


def extract_sample_domain(ref: TraceRefinement, em: EnrolledModel, check: bool = True) -> Polytope:
    """Delay values that let a prophetic scheduler follow the trace to its goal set.

    For each stochastic step the jump set J_k (where the delay is about to
    expire) fixes that delay and only bounds the others from below; the goal
    set fixes every expired delay and bounds the rest from below.
    """
    d = em.d_r
    if d == 0:
        return Polytope.universe(0)
    result = nonnegative_orthant(d)
    for k, delay in sorted(ref.expiration_map.items()):
        result = result.intersect(_delay_piece(ref.intermediate_goals[k], em, [delay]))
    expired = sorted(ref.expiration_map.values())
    from_goal = _delay_piece(ref.trace.goal_set, em, expired).intersect(nonnegative_orthant(d))
    result = result.intersect(from_goal)
    if check and result != from_goal:
        msg = (
            f"trace {ref.trace.index}: intersection over expiry steps is strictly smaller "
            "than the piece derived from the goal set alone"
        )
        log.warning(msg)
        raise InternalConsistencyError(msg)
    return result


@dataclass(frozen=True)
class SampleDomain:
    pieces: tuple
    provenance: tuple
    dim: int

    def contains(self, v, tol: float = 1e-9) -> bool:
        return any(p.contains_point(v, tol) for p in self.pieces)

    def float_pieces(self):
        return [p.float_arrays() for p in self.pieces]

    def membership(self, points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        hit = np.zeros(pts.shape[0], dtype=bool)
        for A, b in self.float_pieces():
            if A.shape[0] == 0:
                hit[:] = True
                break
            hit |= np.all(pts @ A.T <= b + tol, axis=1)
        return hit


def union_sample_domains(
    pieces: Sequence[Polytope], provenance: Optional[Sequence[int]] = None, dim: Optional[int] = None
) -> SampleDomain:
    pieces = tuple(pieces)
    if dim is None:
        dim = pieces[0].dim if pieces else 0
    if any(p.dim != dim for p in pieces):
        raise ValueError("sample-domain pieces differ in dimension")
    if provenance is None:
        provenance = tuple(range(len(pieces)))
    keep = [(p, i) for p, i in zip(pieces, provenance) if not p.is_empty()]
    return SampleDomain(tuple(p for p, _ in keep), tuple(i for _, i in keep), dim)
