"""Cycle, planarity, and boundary constraint generation over the line graph.

Constraints are emitted symbolically: terms reference edge booleans by
edge id (`BRef`), planarity booleans by pair and axis (`PiRef`), and
boundary booleans by vertex (`BoundRef`). The MILP builder maps these
references onto concrete model variables. All enumeration is canonical
(sorted), so output is deterministic and independent of input ordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import Direction, third_axis
from .linegraph import LineGraph

LE = "<="


@dataclass(frozen=True)
class BRef:
    """Boolean of the intersection edge with this edge id."""

    edge: int


@dataclass(frozen=True)
class PiRef:
    """Planarity boolean of a same-direction pair, for one of its two planes."""

    k: int
    l: int
    axis: Direction


@dataclass(frozen=True)
class BoundRef:
    """Boundary boolean of one vertex."""

    i: int


@dataclass(frozen=True)
class SymbolicConstraint:
    terms: tuple[tuple[object, float], ...]
    sense: str
    rhs: float
    name: str = ""


@dataclass(frozen=True)
class CycleConstraint:
    """Sum of the cycle's edge booleans is at most (cycle length - 1)."""

    edges: tuple[int, ...]
    bound: int

    def as_symbolic(self) -> SymbolicConstraint:
        return SymbolicConstraint(
            terms=tuple((BRef(e), 1.0) for e in self.edges),
            sense=LE, rhs=float(self.bound),
            name=f"cycle_{'_'.join(str(e) for e in self.edges)}")


@dataclass(frozen=True)
class PlanarityPair:
    """Two same-direction lines that may span a Manhattan plane.

    var_e / var_f are the booleans of the two candidate plane orientations
    (the two axes other than the shared direction, in x < y < z order).
    """

    k: int
    l: int
    var_e: PiRef
    var_f: PiRef
    witnesses: tuple[int, ...]


@dataclass
class PlanarityOutput:
    pairs: list[PlanarityPair] = field(default_factory=list)
    constraints: list[SymbolicConstraint] = field(default_factory=list)
    #: objective adds +mu1 per listed reference
    objective_refs: list[PiRef] = field(default_factory=list)


@dataclass(frozen=True)
class BoundaryVar:
    i: int
    var: BoundRef


@dataclass
class BoundaryOutput:
    variables: list[BoundaryVar] = field(default_factory=list)
    constraints: list[SymbolicConstraint] = field(default_factory=list)
    #: objective adds mu2 * (offset_count - sum of listed references)
    objective_refs: list[BoundRef] = field(default_factory=list)
    offset_count: int = 0


def enumerate_3cycles(g: LineGraph) -> list[CycleConstraint]:
    """Every simple 3-cycle, with bound 2 (at most two true intersections).

    All 3-cycles are xyz-type because edges never join equal labels.
    """
    eidx = g.edge_index()
    adj = {v: sorted(nb for nb, _ in lst) for v, lst in g.adjacency().items()}
    out = []
    for i in sorted(adj):
        for j in adj[i]:
            if j <= i:
                continue
            for k in adj[j]:
                if k <= j or k not in adj or i not in adj[k]:
                    continue
                out.append(CycleConstraint(
                    edges=(eidx[(i, j)], eidx[(j, k)], eidx[(i, k)]), bound=2))
    out.sort(key=lambda c: c.edges)
    return out


def enumerate_4cycles(g: LineGraph) -> list[CycleConstraint]:
    """Every simple 4-cycle of xyzy type, with bound 3.

    xyxy-type cycles (two alternating labels) are physically realizable
    with all four intersections true and produce no constraint. Cycles
    with a chord are still emitted; the chord's own 3-cycles handle the
    rest. A 4-cycle is xyzy-type iff its vertices use exactly 3 labels.
    """
    eidx = g.edge_index()
    adj = {v: set(nb for nb, _ in lst) for v, lst in g.adjacency().items()}
    dirs = {v.id: v.direction for v in g.vertices}
    seen: set[tuple[int, ...]] = set()
    out = []
    ids = sorted(adj)
    for a in ids:
        for c in ids:
            if c <= a:
                continue
            common = sorted(adj[a] & adj[c])
            for bi in range(len(common)):
                for di in range(bi + 1, len(common)):
                    b, d = common[bi], common[di]
                    # canonical key: lowest vertex first, then smaller neighbor
                    m = min(a, b, c, d)
                    if m == a:
                        cyc = (a, min(b, d), c, max(b, d))
                    elif m == c:
                        cyc = (c, min(b, d), a, max(b, d))
                    elif m == b:
                        cyc = (b, min(a, c), d, max(a, c))
                    else:
                        cyc = (d, min(a, c), b, max(a, c))
                    if cyc in seen:
                        continue
                    seen.add(cyc)
                    if len({dirs[v] for v in cyc}) != 3:
                        continue
                    edges = tuple(
                        eidx[(min(cyc[t], cyc[(t + 1) % 4]), max(cyc[t], cyc[(t + 1) % 4]))]
                        for t in range(4))
                    out.append(CycleConstraint(edges=edges, bound=3))
    out.sort(key=lambda c: c.edges)
    return out


def _bbox_distance(seg_a, seg_b) -> float:
    ea, eb = seg_a.endpoints(), seg_b.endpoints()
    dx = max(0.0, max(ea[:, 0].min(), eb[:, 0].min()) - min(ea[:, 0].max(), eb[:, 0].max()))
    dy = max(0.0, max(ea[:, 1].min(), eb[:, 1].min()) - min(ea[:, 1].max(), eb[:, 1].max()))
    return math.hypot(dx, dy)


def generate_planarity(g: LineGraph,
                       gate_px: float = math.inf) -> PlanarityOutput:
    """Planarity pairs and constraints for same-direction line pairs.

    For each unordered same-direction pair {k, l} sharing at least one
    common neighbor (and within `gate_px` of each other), two booleans
    pi^(e), pi^(f) select which Manhattan plane the pair spans, with
    at most one of them true. A common neighbor m of direction e must
    intersect both lines or neither if pi^(e) = 1, and at most one of
    them if pi^(f) = 1 (symmetrically for direction-f neighbors).
    """
    out = PlanarityOutput()
    eidx = g.edge_index()
    adj = {v: set(nb for nb, _ in lst) for v, lst in g.adjacency().items()}
    dirs = {v.id: v.direction for v in g.vertices}
    by_id = {v.id: v for v in g.vertices}
    ids = sorted(adj)
    for k in ids:
        for l in ids:
            if l <= k or dirs[k] is not dirs[l]:
                continue
            witnesses = sorted(adj[k] & adj[l])
            if not witnesses:
                continue
            if math.isfinite(gate_px) and _bbox_distance(by_id[k], by_id[l]) > gate_px:
                continue
            e_axis, f_axis = dirs[k].others()
            pi_e, pi_f = PiRef(k, l, e_axis), PiRef(k, l, f_axis)
            pair = PlanarityPair(k, l, pi_e, pi_f, tuple(witnesses))
            out.pairs.append(pair)
            out.objective_refs.extend([pi_e, pi_f])
            out.constraints.append(SymbolicConstraint(
                terms=((pi_e, 1.0), (pi_f, 1.0)), sense=LE, rhs=1.0,
                name=f"pi_excl_{k}_{l}"))
            for m in witnesses:
                b_km = BRef(eidx[(min(k, m), max(k, m))])
                b_lm = BRef(eidx[(min(l, m), max(l, m))])
                same, other = (pi_e, pi_f) if dirs[m] is e_axis else (pi_f, pi_e)
                out.constraints.append(SymbolicConstraint(
                    terms=((same, 1.0), (b_km, 1.0), (b_lm, -1.0)), sense=LE,
                    rhs=1.0, name=f"pi_eq1_{k}_{l}_{m}"))
                out.constraints.append(SymbolicConstraint(
                    terms=((same, 1.0), (b_lm, 1.0), (b_km, -1.0)), sense=LE,
                    rhs=1.0, name=f"pi_eq2_{k}_{l}_{m}"))
                out.constraints.append(SymbolicConstraint(
                    terms=((other, 1.0), (b_km, 1.0), (b_lm, 1.0)), sense=LE,
                    rhs=2.0, name=f"pi_excl1_{k}_{l}_{m}"))
    return out


def generate_boundary(g: LineGraph) -> BoundaryOutput:
    """Boundary booleans and pairwise constraints.

    A vertex with neighbors of both other directions gets a boolean B_i;
    for every cross-direction neighbor pair (m, n) the row
    b_im + b_in <= 1 + B_i allows both intersections only on boundary
    lines. Vertices whose neighbors all share one direction have B_i
    fixed to 0 and enter the objective only through the constant term.
    """
    out = BoundaryOutput(offset_count=len(g.vertices))
    eidx = g.edge_index()
    dirs = {v.id: v.direction for v in g.vertices}
    adj = g.adjacency()
    for i in sorted(adj):
        neighbors = sorted(nb for nb, _ in adj[i])
        if len({dirs[nb] for nb in neighbors}) < 2:
            continue
        bref = BoundRef(i)
        out.variables.append(BoundaryVar(i, bref))
        out.objective_refs.append(bref)
        for a in range(len(neighbors)):
            for b in range(a + 1, len(neighbors)):
                m, n = neighbors[a], neighbors[b]
                if dirs[m] is dirs[n]:
                    continue
                b_im = BRef(eidx[(min(i, m), max(i, m))])
                b_in = BRef(eidx[(min(i, n), max(i, n))])
                out.constraints.append(SymbolicConstraint(
                    terms=((b_im, 1.0), (b_in, 1.0), (bref, -1.0)), sense=LE,
                    rhs=1.0, name=f"bound_{i}_{m}_{n}"))
    return out


@dataclass
class ConstraintSet:
    """Everything the constraint families contribute to one MILP."""

    cycles: list[CycleConstraint] = field(default_factory=list)
    planarity: PlanarityOutput = field(default_factory=PlanarityOutput)
    boundary: BoundaryOutput = field(default_factory=BoundaryOutput)


def generate_constraints(g: LineGraph, use_cycles: bool = True,
                         use_planarity: bool = True, use_boundary: bool = True,
                         planarity_gate_px: float = math.inf) -> ConstraintSet:
    cs = ConstraintSet()
    if use_cycles:
        cs.cycles = enumerate_3cycles(g) + enumerate_4cycles(g)
    if use_planarity:
        cs.planarity = generate_planarity(g, gate_px=planarity_gate_px)
    if use_boundary:
        cs.boundary = generate_boundary(g)
    return cs
