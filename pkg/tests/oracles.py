"""Independent oracles used by the tests.

Everything here is deliberately written against the math, not against the
package's own implementations: explicit adjugate inverses, exhaustive
enumeration, LP feasibility of the raw equality system, and brute-force
spanning tree search.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linprog

from linelift.geometry import Direction


def inverse_3x3(m: np.ndarray) -> np.ndarray:
    """Explicit adjugate-based 3x3 inverse."""
    a, b, c = m[0]
    d, e, f = m[1]
    g, h, i = m[2]
    det = a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)
    adj = np.array([
        [e * i - f * h, c * h - b * i, b * f - c * e],
        [f * g - d * i, a * i - c * g, c * d - a * f],
        [d * h - e * g, b * g - a * h, a * e - b * d],
    ])
    return adj / det


def signed_permutation_rotations():
    """All 24 proper rotations that permute and flip coordinate axes."""
    mats = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1, -1), repeat=3):
            m = np.zeros((3, 3))
            for row, col in enumerate(perm):
                m[row, col] = signs[row]
            if np.linalg.det(m) > 0:
                mats.append(m)
    return mats


def rotation_error_deg(r1: np.ndarray, r2: np.ndarray) -> float:
    """Angular distance between rotations, minimized over axis relabelings."""
    best = np.inf
    for p in signed_permutation_rotations():
        rel = r1 @ p @ r2.T
        cosang = (np.trace(rel) - 1.0) / 2.0
        ang = np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0)))
        best = min(best, ang)
    return float(best)


def brute_force_triangles(n_vertices, edges):
    """All vertex triples whose three pairs are all edges."""
    eset = {tuple(sorted(e)) for e in edges}
    out = []
    for tri in itertools.combinations(range(n_vertices), 3):
        i, j, k = tri
        if {(i, j), (j, k), (i, k)} <= eset:
            out.append(tri)
    return out


def brute_force_4cycles(n_vertices, edges, labels):
    """All simple 4-cycles, tagged with their distinct-label count.

    Returns canonical tuples (a, b, c, d) describing the cycle a-b-c-d-a
    with a the smallest vertex and b < d.
    """
    eset = {tuple(sorted(e)) for e in edges}

    def adj(u, v):
        return tuple(sorted((u, v))) in eset

    found = {}
    for quad in itertools.permutations(range(n_vertices), 4):
        a, b, c, d = quad
        if not (adj(a, b) and adj(b, c) and adj(c, d) and adj(d, a)):
            continue
        if a != min(quad) or b > d:
            continue
        found[(a, b, c, d)] = len({labels[v] for v in quad})
    return found


def cycle_equality_system_feasible(lines, true_edges, lam_max=1e4) -> bool:
    """LP feasibility of the raw zero-slack equality system.

    `lines` maps vertex id -> (direction, d1, d2) with d1/d2 the two
    endpoint ray directions; `true_edges` are the (i, j) pairs whose
    intersections are asserted true. Rows: for every line, zero extent
    along both non-true axes; for every true edge, equal third-axis
    coordinates for all four endpoint pairs; all lambdas >= 1.
    """
    ids = sorted(lines)
    col = {}
    for vid in ids:
        for a in (1, 2):
            col[(vid, a)] = len(col)
    rows, rhs = [], []

    def add(terms):
        row = np.zeros(len(col))
        for key, coef in terms:
            row[col[key]] = coef
        rows.append(row)
        rhs.append(0.0)

    for vid in ids:
        direction, d1, d2 = lines[vid]
        for beta in range(3):
            if beta == direction.index:
                continue
            add([((vid, 1), d1[beta]), ((vid, 2), -d2[beta])])
    for i, j in true_edges:
        di = lines[i][0].index
        dj = lines[j][0].index
        (alpha,) = {0, 1, 2} - {di, dj}
        for a in (1, 2):
            for b in (1, 2):
                add([((i, a), lines[i][a][alpha]), ((j, b), -lines[j][b][alpha])])

    res = linprog(
        c=np.zeros(len(col)),
        A_eq=np.array(rows), b_eq=np.array(rhs),
        bounds=[(1.0, lam_max)] * len(col),
        method="highs")
    return res.status == 0


def max_true_edges_by_brute_force(lines, cycle_edges, lam_max=1e4) -> int:
    """Largest count of simultaneously-true edges, via LP feasibility."""
    best = 0
    for r in range(len(cycle_edges), -1, -1):
        for subset in itertools.combinations(cycle_edges, r):
            if cycle_equality_system_feasible(lines, list(subset), lam_max):
                return r
    return best


def spanning_tree_min_weight(n_vertices, weighted_edges) -> float | None:
    """Exhaustive minimum over all spanning trees; None if disconnected.

    weighted_edges: list of (u, v, weight). Connectivity via BFS; a
    subset of n-1 edges is a spanning tree iff it connects everything.
    """
    best = None
    m = len(weighted_edges)
    if n_vertices == 1:
        return 0.0
    for subset in itertools.combinations(range(m), n_vertices - 1):
        adj = {v: [] for v in range(n_vertices)}
        for idx in subset:
            u, v, _ = weighted_edges[idx]
            adj[u].append(v)
            adj[v].append(u)
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        if len(seen) == n_vertices:
            weight = sum(weighted_edges[idx][2] for idx in subset)
            if best is None or weight < best:
                best = weight
    return best


def exhaustive_milp_objective(model) -> float:
    """Best objective over all boolean fixings, each solved as a pure LP."""
    from linelift.milp.lp import LpArrays, LpStatus

    arrays = LpArrays(model)
    bool_cols = np.flatnonzero(arrays.integral)
    best = -np.inf
    for bits in itertools.product((0.0, 1.0), repeat=len(bool_cols)):
        lb, ub = arrays.lb.copy(), arrays.ub.copy()
        lb[bool_cols] = bits
        ub[bool_cols] = bits
        res = arrays.solve(lb=lb, ub=ub)
        if res.status is LpStatus.OPTIMAL and res.objective > best:
            best = res.objective
    return best


def bfs_components(vertex_ids, edges):
    """Independent connected-components finder for graph checks."""
    adj = {v: set() for v in vertex_ids}
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)
    seen, comps = set(), []
    for start in sorted(vertex_ids):
        if start in seen:
            continue
        comp, queue = [], [start]
        seen.add(start)
        while queue:
            u = queue.pop(0)
            comp.append(u)
            for v in sorted(adj[u]):
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        comps.append(sorted(comp))
    return comps
