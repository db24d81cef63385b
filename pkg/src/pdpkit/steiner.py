"""Connector trees in radial completions: detours, separators, weak linkages.

The tree lives in the radial completion of the instance graph and has the
terminals as its exact leaf set.  Short-cutting replaces a maximal degree-2
path by a strictly shorter connection between the two components it joins,
so the total edge count drops every round and the process halts.  Separators
between two tree pieces come from unit-vertex-capacity max flow, certified by
the matching family of vertex-disjoint paths.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DisconnectedError, PathTooShortError
from .plane import PlaneGraph, dart_edge, dart_reverse


@dataclass(frozen=True)
class SteinerTree:
    """Edge ids (within the host graph) forming a tree whose leaves are the terminals."""

    edges: frozenset[int]
    terminals: frozenset[int]


@dataclass(frozen=True)
class Detour:
    u: int
    v: int
    path_edges: tuple[int, ...]      # the maximal degree-2 path being bypassed
    shortcut: tuple[int, ...]        # vertex sequence of the shorter connection


@dataclass(frozen=True)
class Walk:
    """A walk as a dart sequence; closed walks wrap around."""

    darts: tuple[int, ...]
    closed: bool = False


# ---------------------------------------------------------------------------
# Tree basics
# ---------------------------------------------------------------------------


def tree_adjacency(graph: PlaneGraph, tree: SteinerTree) -> dict[int, list[tuple[int, int]]]:
    adj: dict[int, list[tuple[int, int]]] = {}
    for e in sorted(tree.edges):
        u, v = graph.edges[e]
        adj.setdefault(u, []).append((v, e))
        adj.setdefault(v, []).append((u, e))
    return adj


def tree_vertices(graph: PlaneGraph, tree: SteinerTree) -> set[int]:
    out = set()
    for e in tree.edges:
        out.update(graph.edges[e])
    if not tree.edges:
        out.update(tree.terminals)
    return out


def leaves(graph: PlaneGraph, tree: SteinerTree) -> set[int]:
    adj = tree_adjacency(graph, tree)
    return {v for v, nb in adj.items() if len(nb) == 1}


def validate_tree(graph: PlaneGraph, tree: SteinerTree) -> bool:
    """Connected, acyclic, and leaf set exactly the terminals."""
    if not tree.edges:
        return len(tree.terminals) <= 1
    verts = tree_vertices(graph, tree)
    if len(tree.edges) != len(verts) - 1:
        return False
    adj = tree_adjacency(graph, tree)
    start = next(iter(verts))
    seen = {start}
    stack = [start]
    while stack:
        x = stack.pop()
        for w, _ in adj[x]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    if seen != verts:
        return False
    return leaves(graph, tree) == set(tree.terminals)


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def initial_steiner_tree(graph: PlaneGraph, terminals) -> SteinerTree:
    """Grow a tree by attaching terminals along shortest paths, then trim.

    Attachment paths never run through terminals and never attach at a
    terminal that already has a tree edge, so every terminal ends up a leaf.
    Ties are broken by (vertex id, edge id), making the tree deterministic.
    """
    terms = sorted(set(terminals))
    if len(terms) < 2:
        raise DisconnectedError("need at least two terminals")
    term_set = set(terms)
    adj = {
        v: sorted(
            ((graph.dart_head(d), dart_edge(d)) for d in graph.rotation[v]),
            key=lambda p: (p[1], p[0]),
        )
        for v in graph.vertices
    }

    tree_edges: set[int] = set()
    in_tree = {terms[0]}
    tree_deg: dict[int, int] = {}

    for goal in terms[1:]:
        # BFS from the current tree; terminals may appear only as endpoints
        sources = [
            v for v in sorted(in_tree)
            if v not in term_set or tree_deg.get(v, 0) == 0
        ]
        prev: dict[int, tuple[int, int]] = {}
        seen = set(sources)
        frontier = list(sources)
        found = goal in seen
        while frontier and not found:
            nxt = []
            for x in frontier:
                for w, e in adj[x]:
                    if w in seen:
                        continue
                    if w in term_set and w != goal:
                        continue
                    if w in in_tree:
                        continue
                    seen.add(w)
                    prev[w] = (x, e)
                    if w == goal:
                        found = True
                        break
                    nxt.append(w)
                if found:
                    break
            frontier = nxt
        if not found:
            raise DisconnectedError(f"terminal {goal} unreachable from the tree")
        cur = goal
        while cur not in in_tree:
            x, e = prev[cur]
            tree_edges.add(e)
            tree_deg[cur] = tree_deg.get(cur, 0) + 1
            tree_deg[x] = tree_deg.get(x, 0) + 1
            in_tree.add(cur)
            cur = x

    tree = SteinerTree(edges=frozenset(tree_edges), terminals=frozenset(terms))
    return _trim(graph, tree)


def _trim(graph: PlaneGraph, tree: SteinerTree) -> SteinerTree:
    edges = set(tree.edges)
    adj = tree_adjacency(graph, SteinerTree(frozenset(edges), tree.terminals))
    degree = {v: len(nb) for v, nb in adj.items()}
    stale = [v for v, d in degree.items() if d == 1 and v not in tree.terminals]
    while stale:
        v = stale.pop()
        if degree.get(v, 0) != 1 or v in tree.terminals:
            continue
        w, e = next((w, e) for w, e in adj[v] if e in edges)
        edges.discard(e)
        degree[v] = 0
        degree[w] -= 1
        adj[v] = []
        adj[w] = [(x, f) for x, f in adj[w] if f != e]
        if degree[w] == 1 and w not in tree.terminals:
            stale.append(w)
    return SteinerTree(edges=frozenset(edges), terminals=tree.terminals)


# ---------------------------------------------------------------------------
# Degree-2 paths and detours
# ---------------------------------------------------------------------------


def degree2_paths(graph: PlaneGraph, tree: SteinerTree) -> list[tuple[int, ...]]:
    """Maximal degree-2 paths as vertex sequences between branch/leaf vertices.

    Every tree edge lies on exactly one returned path.
    """
    adj = tree_adjacency(graph, tree)
    degree = {v: len(nb) for v, nb in adj.items()}
    hubs = sorted(v for v, d in degree.items() if d != 2)
    paths = []
    used_edges = set()
    for h in hubs:
        for w, e in adj[h]:
            if e in used_edges:
                continue
            path = [h, w]
            used_edges.add(e)
            prev_edge = e
            while degree[path[-1]] == 2:
                w2, e2 = next(p for p in adj[path[-1]] if p[1] != prev_edge)
                used_edges.add(e2)
                path.append(w2)
                prev_edge = e2
            paths.append(tuple(path))
    # keep one orientation per path: lexicographically smaller end first
    seen = set()
    out = []
    for p in paths:
        canon = p if (p[0], p[1]) <= (p[-1], p[-2]) else tuple(reversed(p))
        if canon not in seen:
            seen.add(canon)
            out.append(canon)
    return out


def _path_edges(graph, tree, path):
    adj = tree_adjacency(graph, tree)
    out = []
    for a, b in zip(path, path[1:]):
        e = min(e for w, e in adj[a] if w == b)
        out.append(e)
    return tuple(out)


def _side_components(graph, tree, path):
    """Vertex sets of the two components of the tree minus the path interior."""
    interior = set(path[1:-1])
    adj = tree_adjacency(graph, tree)
    path_edges = set(_path_edges(graph, tree, path))

    def comp(root):
        seen = {root}
        stack = [root]
        while stack:
            x = stack.pop()
            for w, e in adj[x]:
                if e in path_edges or w in interior or w in seen:
                    continue
                seen.add(w)
                stack.append(w)
        return seen

    return comp(path[0]), comp(path[-1])


def find_detour(graph: PlaneGraph, tree: SteinerTree) -> Detour | None:
    """Shortest available shortcut over all maximal degree-2 paths, or None.

    For each maximal degree-2 path, a breadth-first search looks for a
    strictly shorter connection between the two components left after
    removing the path interior.  Terminals are only usable as connection
    endpoints while isolated, so the leaf set survives the rewiring.
    """
    term_set = set(tree.terminals)
    adj = {
        v: sorted(
            ((graph.dart_head(d), dart_edge(d)) for d in graph.rotation[v]),
            key=lambda p: (p[1], p[0]),
        )
        for v in graph.vertices
    }
    best = None
    for path in degree2_paths(graph, tree):
        limit = len(path) - 1  # shortcut must be strictly shorter
        if limit <= 1:
            continue
        comp_u, comp_v = _side_components(graph, tree, path)

        def usable_endpoint(x, comp):
            return x not in term_set or len(comp) == 1

        sources = sorted(x for x in comp_u if usable_endpoint(x, comp_u))
        targets = {x for x in comp_v if usable_endpoint(x, comp_v)}
        if not sources or not targets:
            continue
        prev = {}
        seen = set(sources)
        frontier = sources
        dist = 0
        hit = None
        # a shortcut found at distance d has d edges; require d <= limit - 1
        while frontier and hit is None and dist < limit - 1:
            dist += 1
            nxt = []
            for x in frontier:
                for w, e in adj[x]:
                    if w in seen:
                        continue
                    if w in targets:
                        prev[w] = x
                        hit = w
                        break
                    # interior vertices avoid terminals and both components
                    if w in term_set or w in comp_u or w in comp_v:
                        continue
                    seen.add(w)
                    prev[w] = x
                    nxt.append(w)
                if hit is not None:
                    break
            frontier = nxt
        if hit is None:
            continue
        shortcut = [hit]
        while shortcut[-1] not in set(sources):
            shortcut.append(prev[shortcut[-1]])
        shortcut.reverse()
        if best is None or len(shortcut) - 1 < len(best.shortcut) - 1:
            best = Detour(
                u=path[0],
                v=path[-1],
                path_edges=_path_edges(graph, tree, path),
                shortcut=tuple(shortcut),
            )
    return best


def remove_detours(graph: PlaneGraph, tree: SteinerTree, max_rounds: int | None = None):
    """Short-cut until no detour remains.

    Returns (tree, rounds).  Each round strictly decreases the edge count, so
    the number of rounds is at most the initial total length.
    """
    rounds = 0
    cap = max_rounds if max_rounds is not None else len(tree.edges) + 1
    while rounds < cap:
        det = find_detour(graph, tree)
        if det is None:
            return tree, rounds
        rounds += 1
        before = len(tree.edges)
        edges = set(tree.edges) - set(det.path_edges)
        adjacency_all = {
            v: [(graph.dart_head(d), dart_edge(d)) for d in graph.rotation[v]]
            for v in graph.vertices
        }
        for a, b in zip(det.shortcut, det.shortcut[1:]):
            e = min(e for w, e in adjacency_all[a] if w == b)
            edges.add(e)
        tree = _respan(graph, edges, tree.terminals)
        if len(tree.edges) >= before:
            raise RuntimeError("short-cutting failed to shrink the tree")
    raise RuntimeError("detour removal did not converge within the length bound")


def _respan(graph, edges, terminals):
    """Spanning tree of the replacement edge set, then trim to terminal leaves."""
    adj: dict[int, list[tuple[int, int]]] = {}
    for e in sorted(edges):
        u, v = graph.edges[e]
        adj.setdefault(u, []).append((v, e))
        adj.setdefault(v, []).append((u, e))
    root = min(adj)
    seen = {root}
    keep = set()
    frontier = [root]
    while frontier:
        nxt = []
        for x in frontier:
            for w, e in adj[x]:
                if w not in seen:
                    seen.add(w)
                    keep.add(e)
                    nxt.append(w)
        frontier = nxt
    if not set(terminals) <= seen:
        raise DisconnectedError("rewired tree lost a terminal")
    return _trim(graph, SteinerTree(frozenset(keep), frozenset(terminals)))


# ---------------------------------------------------------------------------
# Separators (unit vertex capacities, certified by Menger)
# ---------------------------------------------------------------------------


def separator(graph: PlaneGraph, tree: SteinerTree, path: tuple[int, ...],
              end: str, d_near: int, d_far: int) -> frozenset[int]:
    cut, _ = separator_with_paths(graph, tree, path, end, d_near, d_far)
    return cut


def separator_with_paths(graph: PlaneGraph, tree: SteinerTree, path: tuple[int, ...],
                         end: str, d_near: int, d_far: int):
    """Minimum vertex set separating the near-side subtree from the far one.

    ``path`` is a maximal degree-2 path; orienting from ``end``, the near
    side is the subtree holding the near endpoint after the path vertex at
    distance ``d_near`` is removed, the far side the subtree holding the
    other endpoint after cutting at ``d_far``.  Returns the cut and a family
    of that many vertex-disjoint connecting paths (Menger certificate).
    """
    if end not in ("u", "v"):
        raise ValueError("end must be 'u' or 'v'")
    seq = path if end == "u" else tuple(reversed(path))
    if not 1 <= d_near < d_far < len(seq) - 1 + 1:
        if d_near < 1 or d_far <= d_near:
            raise ValueError("need 1 <= d_near < d_far")
    if len(seq) - 1 <= d_far:
        raise PathTooShortError(
            f"path has length {len(seq) - 1}, need more than d_far={d_far}"
        )
    near_cutv = seq[d_near]
    far_cutv = seq[d_far]
    side_a = _subtree_avoiding(graph, tree, seq[0], near_cutv)
    side_b = _subtree_avoiding(graph, tree, seq[-1], far_cutv)
    if side_a & side_b:
        raise ValueError("cut vertices do not split the tree")
    return vertex_menger(graph, side_a, side_b)


def _subtree_avoiding(graph, tree, root, removed):
    adj = tree_adjacency(graph, tree)
    seen = {root}
    stack = [root]
    while stack:
        x = stack.pop()
        for w, _ in adj[x]:
            if w != removed and w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def vertex_menger(graph: PlaneGraph, side_a, side_b):
    """Minimum vertex cut between two disjoint vertex sets plus disjoint paths.

    Unit-capacity max flow on the split digraph (each vertex outside the two
    sides becomes in->out with capacity one; the sides are contracted into
    the source and sink).  Returns the cut and one connecting path per flow
    unit; the paths' interiors are pairwise vertex-disjoint, which certifies
    minimality.  Raises when the sides touch, since then no vertex set
    outside them can separate.
    """
    side_a = set(side_a)
    side_b = set(side_b)
    if side_a & side_b:
        raise ValueError("sides overlap")
    for v in sorted(side_a):
        if any(w in side_b for w in graph.neighbors(v)):
            raise ValueError("sides are adjacent: no separator exists")

    middle = sorted(v for v in graph.vertices if v not in side_a and v not in side_b)
    inf = len(middle) + 1
    cap: dict = {("s",): {}, ("t",): {}}
    flow: dict = {}

    def add_arc(a, b, c):
        cap.setdefault(a, {})
        cap.setdefault(b, {})
        cap[a][b] = cap[a].get(b, 0) + c
        cap[b].setdefault(a, 0)

    for v in middle:
        add_arc((v, 0), (v, 1), 1)
        nbrs = graph.neighbors(v)
        if any(w in side_a for w in nbrs):
            add_arc(("s",), (v, 0), inf)
        if any(w in side_b for w in nbrs):
            add_arc((v, 1), ("t",), inf)
    mid_set = set(middle)
    for e in sorted(graph.edges):
        u, v = graph.edges[e]
        if u in mid_set and v in mid_set:
            add_arc((u, 1), (v, 0), inf)
            add_arc((v, 1), (u, 0), inf)

    from collections import deque

    flow_value = 0
    while True:
        prev = {("s",): None}
        dq = deque([("s",)])
        while dq and ("t",) not in prev:
            x = dq.popleft()
            for y in cap[x]:
                if cap[x][y] > 0 and y not in prev:
                    prev[y] = x
                    if y == ("t",):
                        break
                    dq.append(y)
        if ("t",) not in prev:
            break
        y = ("t",)
        while prev[y] is not None:
            x = prev[y]
            cap[x][y] -= 1
            cap[y][x] += 1
            flow[(x, y)] = flow.get((x, y), 0) + 1
            if flow.get((y, x), 0) > 0:  # cancelled a previous unit
                flow[(x, y)] -= 1
                flow[(y, x)] -= 1
            y = x
        flow_value += 1

    reach = {("s",)}
    stack = [("s",)]
    while stack:
        x = stack.pop()
        for y in cap[x]:
            if cap[x][y] > 0 and y not in reach:
                reach.add(y)
                stack.append(y)
    cut = frozenset(v for v in middle if (v, 0) in reach and (v, 1) not in reach)

    paths = []
    for v in middle:
        if flow.get((("s",), (v, 0)), 0) != 1:
            continue
        seg = [v]
        cur = v
        while True:
            out = None
            for y, f in flow.items():
                if f == 1 and y[0] == (cur, 1):
                    out = y[1]
                    break
            if out == ("t",) or out is None:
                break
            seg.append(out[0])
            cur = out[0]
        a_end = min(w for w in graph.neighbors(seg[0]) if w in side_a)
        b_end = min(w for w in graph.neighbors(seg[-1]) if w in side_b)
        paths.append((a_end, *seg, b_end))

    assert len(paths) == flow_value == len(cut)
    return cut, paths


# ---------------------------------------------------------------------------
# Weak linkages
# ---------------------------------------------------------------------------


def _walk_ok(graph: PlaneGraph, walk: Walk) -> bool:
    ds = walk.darts
    if not ds:
        return False
    for a, b in zip(ds, ds[1:]):
        if graph.dart_head(a) != graph.dart_tail(b):
            return False
    if walk.closed and graph.dart_head(ds[-1]) != graph.dart_tail(ds[0]):
        return False
    return True


def _transits(graph: PlaneGraph, walk: Walk):
    """Per visited vertex, the (arrive-dart, depart-dart) chord at it.

    Both chord ends are darts at the vertex itself: the reverse of the
    arriving dart and the departing dart.
    """
    ds = walk.darts
    pairs = list(zip(ds, ds[1:]))
    if walk.closed:
        pairs.append((ds[-1], ds[0]))
    return [(graph.dart_head(a), (dart_reverse(a), b)) for a, b in pairs]


def validate_weak_linkage(graph: PlaneGraph, walks) -> bool:
    """Edge-disjoint and non-crossing.

    No edge is traversed twice across all walks, and at every vertex the
    transit chords (arrival dart paired with departure dart in the rotation's
    cyclic order) are pairwise non-interleaved.
    """
    used_edges = set()
    for w in walks:
        if not _walk_ok(graph, w):
            return False
        for d in w.darts:
            e = dart_edge(d)
            if e in used_edges:
                return False
            used_edges.add(e)

    chords: dict[int, list[tuple[int, int]]] = {}
    for w in walks:
        for v, chord in _transits(graph, w):
            chords.setdefault(v, []).append(chord)

    for v, chord_list in chords.items():
        pos = {d: i for i, d in enumerate(graph.rotation[v])}
        n = len(graph.rotation[v])
        for i, (a1, b1) in enumerate(chord_list):
            for a2, b2 in chord_list[i + 1:]:
                if _chords_cross(pos[a1], pos[b1], pos[a2], pos[b2], n):
                    return False
    return True


def _chords_cross(a1, b1, a2, b2, n) -> bool:
    """Do chords (a1,b1) and (a2,b2) interleave on a cycle of n positions?"""

    def between(x, lo, hi):
        # x strictly inside the arc from lo to hi going clockwise
        if lo <= hi:
            return lo < x < hi
        return x > lo or x < hi

    in1 = between(a2, a1, b1)
    in2 = between(b2, a1, b1)
    return in1 != in2


def is_pushed_onto(walks, tree: SteinerTree, multiplied: PlaneGraph,
                   edge_origin: dict[int, int]) -> bool:
    """Every walk edge is a parallel copy of a tree edge, and no copy repeats.

    ``multiplied`` must come from multiply_edges of the tree's host graph and
    ``edge_origin`` is the copy-to-original mapping it returned.
    """
    used = set()
    for w in walks:
        for d in w.darts:
            e = dart_edge(d)
            if e in used:
                return False
            used.add(e)
            if edge_origin.get(e) not in tree.edges:
                return False
    return True


# ---------------------------------------------------------------------------
# Emission formats
# ---------------------------------------------------------------------------


def emit_steiner_tree(tree: SteinerTree) -> str:
    return "stree {}\n".format(" ".join(map(str, sorted(tree.edges))))


def emit_weak_linkage(walks) -> str:
    # dart as signed edge id: +e is the edge's forward dart, -e the reverse
    lines = []
    for i, w in enumerate(walks, start=1):
        toks = [
            str(dart_edge(d)) if d % 2 == 0 else str(-dart_edge(d))
            for d in w.darts
        ]
        lines.append("walk {} {}".format(i, " ".join(toks)))
    return "\n".join(lines) + ("\n" if lines else "")
