"""Tree decompositions: elimination heuristics, an exact small solver, nice form.

Heuristics use elimination orderings (min-fill or min-degree, ties broken by
smallest vertex id).  The exact solver runs the subset dynamic program over
elimination orderings with bitmask reachability, capped at a configurable
vertex count.  ``make_nice`` normalizes any decomposition into leaf /
introduce / forget / join nodes with an empty root bag, preserving width.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import SizeLimitExceededError

EXACT_CAP_DEFAULT = 15


@dataclass
class TreeDecomposition:
    bags: list[frozenset[int]]
    parent: list[int]  # parent[root] == -1

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags), default=1) - 1

    @property
    def root(self) -> int:
        return self.parent.index(-1)

    def children(self) -> list[list[int]]:
        ch: list[list[int]] = [[] for _ in self.bags]
        for i, p in enumerate(self.parent):
            if p >= 0:
                ch[p].append(i)
        return ch


@dataclass
class NiceNode:
    kind: str                 # leaf | introduce | forget | join
    vertex: int | None
    bag: tuple[int, ...]      # sorted
    children: tuple[int, ...] = field(default_factory=tuple)


@dataclass
class NiceTreeDecomposition:
    nodes: list[NiceNode]     # indices; root is the last node
    width: int

    @property
    def root(self) -> int:
        return len(self.nodes) - 1


def _adjacency(graph) -> dict[int, set[int]]:
    """Simple undirected adjacency; parallel edges and loops are irrelevant here."""
    adj: dict[int, set[int]] = {v: set() for v in graph.vertices}
    for u, v in graph.edges.values():
        if u != v:
            adj[u].add(v)
            adj[v].add(u)
    return adj


# ---------------------------------------------------------------------------
# Elimination orderings
# ---------------------------------------------------------------------------


def _fill_in(adj, v):
    nbrs = sorted(adj[v])
    count = 0
    for i, a in enumerate(nbrs):
        for b in nbrs[i + 1:]:
            if b not in adj[a]:
                count += 1
    return count


def _eliminate(adj, v):
    nbrs = adj.pop(v)
    for a in nbrs:
        adj[a].discard(v)
    for a in nbrs:
        for b in nbrs:
            if a < b:
                adj[a].add(b)
                adj[b].add(a)


def _order_by(graph, score) -> list[int]:
    adj = _adjacency(graph)
    order = []
    while adj:
        v = min(adj, key=lambda x: (score(adj, x), x))
        order.append(v)
        _eliminate(adj, v)
    return order


def _decomposition_from_order(graph, order: list[int]) -> TreeDecomposition:
    """Standard construction: bag of v is v plus its neighbours at elimination."""
    adj = _adjacency(graph)
    position = {v: i for i, v in enumerate(order)}
    bags = []
    for v in order:
        bags.append(frozenset(adj[v]) | {v})
        _eliminate(adj, v)
    parent = [-1] * len(order)
    for i, v in enumerate(order):
        later = [w for w in bags[i] if w != v]
        if later:
            parent[i] = position[min(later, key=lambda w: position[w])]
    # Components yield a parentless bag each; chain extras under the last root.
    roots = [i for i, p in enumerate(parent) if p == -1]
    if len(roots) > 1:
        bags.append(frozenset())
        parent.append(-1)
        for r in roots:
            parent[r] = len(bags) - 1
    return TreeDecomposition(bags=bags, parent=parent)


# ---------------------------------------------------------------------------
# Exact treewidth for small graphs
# ---------------------------------------------------------------------------


def _exact_order(graph, cap: int) -> list[int]:
    verts = list(graph.vertices)
    n = len(verts)
    if n > cap:
        raise SizeLimitExceededError(f"exact solver capped at {cap} vertices, got {n}")
    index = {v: i for i, v in enumerate(verts)}
    adj_mask = [0] * n
    for u, w in graph.edges.values():
        if u != w:
            adj_mask[index[u]] |= 1 << index[w]
            adj_mask[index[w]] |= 1 << index[u]

    def elim_degree(v, eliminated):
        # Vertices outside `eliminated` reachable from v through eliminated ones.
        comp = 1 << v
        frontier = comp
        reach = 0
        while frontier:
            nbrs = 0
            f = frontier
            while f:
                low = f & -f
                nbrs |= adj_mask[low.bit_length() - 1]
                f ^= low
            reach |= nbrs
            frontier = (nbrs & eliminated) & ~comp
            comp |= frontier
        return bin(reach & ~eliminated & ~(1 << v)).count("1")

    best: dict[int, int] = {0: -1}
    full = (1 << n) - 1
    for size in range(1, n + 1):
        cur: dict[int, int] = {}
        for s, val in best.items():
            if bin(s).count("1") != size - 1:
                continue
        # enumerate subsets of each size incrementally
        prev = {s: v for s, v in best.items() if bin(s).count("1") == size - 1}
        for s, val in prev.items():
            rest = full & ~s
            f = rest
            while f:
                low = f & -f
                v = low.bit_length() - 1
                f ^= low
                ns = s | low
                cost = max(val, elim_degree(v, s))
                if cost < cur.get(ns, 1 << 30):
                    cur[ns] = cost
        best.update(cur)

    # Reconstruct a witness order greedily (smallest vertex among optimal lasts).
    order_rev = []
    s = full
    while s:
        target = best[s]
        chosen = None
        f = s
        while f:
            low = f & -f
            v = low.bit_length() - 1
            f ^= low
            prev_s = s & ~low
            if max(best[prev_s], elim_degree(v, prev_s)) == target:
                if chosen is None or verts[v] < verts[chosen]:
                    chosen = v
        order_rev.append(verts[chosen])
        s &= ~(1 << chosen)
    return list(reversed(order_rev))


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------


def _bfs_order(graph) -> list[int]:
    from collections import deque

    order = []
    seen = set()
    adj = graph.adjacency()
    for start in graph.vertices:
        if start in seen:
            continue
        seen.add(start)
        dq = deque([start])
        while dq:
            v = dq.popleft()
            order.append(v)
            for w in sorted(adj[v]):
                if w not in seen:
                    seen.add(w)
                    dq.append(w)
    return order


def decompose(graph, strategy: str = "min_fill", exact_cap: int = EXACT_CAP_DEFAULT) -> TreeDecomposition:
    """Tree decomposition by the named strategy.

    ``exact_small`` is optimal but limited to ``exact_cap`` vertices;
    ``min_fill`` / ``min_degree`` are the usual elimination heuristics.
    ``bfs_sweep`` eliminates along a breadth-first order, which tends to be
    wider but join-free (valuable because join nodes dominate DP cost).
    """
    if graph.n == 0:
        return TreeDecomposition(bags=[frozenset()], parent=[-1])
    if strategy == "min_fill":
        order = _order_by(graph, _fill_in)
    elif strategy == "min_degree":
        order = _order_by(graph, lambda adj, v: len(adj[v]))
    elif strategy == "bfs_sweep":
        order = _bfs_order(graph)
    elif strategy == "exact_small":
        order = _exact_order(graph, exact_cap)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    return _decomposition_from_order(graph, order)


def join_count(td: TreeDecomposition) -> int:
    """Nodes with two or more children, each costing a DP table product."""
    kids = td.children()
    return sum(max(0, len(c) - 1) for c in kids)


def best_decomposition(graph, strategies=("min_fill", "min_degree", "bfs_sweep")) -> TreeDecomposition:
    """Smallest width wins; ties go to the decomposition with fewer joins."""
    best = None
    for s in strategies:
        td = decompose(graph, s)
        key = (td.width, join_count(td), len(td.bags))
        if best is None or key < best[0]:
            best = (key, td)
    return best[1]


def validate_decomposition(graph, td: TreeDecomposition) -> bool:
    """The three axioms: vertex cover, edge cover, connected occurrence."""
    n = len(td.bags)
    if len(td.parent) != n or td.parent.count(-1) != 1:
        return False
    covered = set().union(*td.bags) if td.bags else set()
    if not set(graph.vertices) <= covered:
        return False
    for u, v in graph.edges.values():
        if u == v:
            continue
        if not any(u in b and v in b for b in td.bags):
            return False
    children = td.children()
    for v in graph.vertices:
        nodes = [i for i, b in enumerate(td.bags) if v in b]
        if not nodes:
            return False
        seen = {nodes[0]}
        stack = [nodes[0]]
        node_set = set(nodes)
        while stack:
            x = stack.pop()
            around = children[x] + ([td.parent[x]] if td.parent[x] >= 0 else [])
            for y in around:
                if y in node_set and y not in seen:
                    seen.add(y)
                    stack.append(y)
        if seen != node_set:
            return False
    return True


def make_nice(td: TreeDecomposition) -> NiceTreeDecomposition:
    """Nice form with empty leaf bags and an empty root bag, same width."""
    nodes: list[NiceNode] = []

    def emit(kind, vertex, bag, children=()):
        nodes.append(NiceNode(kind, vertex, tuple(sorted(bag)), tuple(children)))
        return len(nodes) - 1

    def chain_up_from_empty(bag) -> int:
        idx = emit("leaf", None, ())
        cur: set[int] = set()
        for v in sorted(bag):
            cur.add(v)
            idx = emit("introduce", v, cur, (idx,))
        return idx

    def morph(idx, bag_from, bag_to) -> int:
        cur = set(bag_from)
        for v in sorted(bag_from - bag_to):
            cur.discard(v)
            idx = emit("forget", v, cur, (idx,))
        for v in sorted(bag_to - bag_from):
            cur.add(v)
            idx = emit("introduce", v, cur, (idx,))
        return idx

    children = td.children()

    def build(node) -> int:
        bag = td.bags[node]
        kids = children[node]
        if not kids:
            return chain_up_from_empty(bag)
        tops = []
        for c in kids:
            sub = build(c)
            tops.append(morph(sub, td.bags[c], bag))
        idx = tops[0]
        for other in tops[1:]:
            idx = emit("join", None, bag, (idx, other))
        return idx

    import sys

    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 4 * len(td.bags) + 100))
    try:
        top = build(td.root)
    finally:
        sys.setrecursionlimit(old_limit)
    morph(top, td.bags[td.root], frozenset())
    width = max(len(nd.bag) for nd in nodes) - 1
    return NiceTreeDecomposition(nodes=nodes, width=width)


def validate_nice(graph, nice: NiceTreeDecomposition) -> bool:
    """Structural rules of nice form plus the plain decomposition axioms."""
    for i, nd in enumerate(nice.nodes):
        kinds_ok = {
            "leaf": len(nd.children) == 0 and nd.bag == (),
            "introduce": len(nd.children) == 1,
            "forget": len(nd.children) == 1,
            "join": len(nd.children) == 2,
        }
        if nd.kind not in kinds_ok or not kinds_ok[nd.kind]:
            return False
        if nd.kind == "introduce":
            child = nice.nodes[nd.children[0]]
            if set(nd.bag) != set(child.bag) | {nd.vertex} or nd.vertex in child.bag:
                return False
        if nd.kind == "forget":
            child = nice.nodes[nd.children[0]]
            if set(child.bag) != set(nd.bag) | {nd.vertex} or nd.vertex in nd.bag:
                return False
        if nd.kind == "join":
            a, b = (nice.nodes[c] for c in nd.children)
            if not (nd.bag == a.bag == b.bag):
                return False
        for c in nd.children:
            if c >= i:
                return False
    if nice.nodes[-1].bag != ():
        return False
    parent = [-1] * len(nice.nodes)
    for i, nd in enumerate(nice.nodes):
        for c in nd.children:
            if parent[c] != -1:
                return False
            parent[c] = i
    if parent.count(-1) != 1:
        return False
    td = TreeDecomposition(bags=[frozenset(nd.bag) for nd in nice.nodes], parent=parent)
    return validate_decomposition(graph, td)


def emit_td(td: TreeDecomposition, n_vertices: int) -> str:
    """PACE-style text: header, bag lines, then tree edge lines."""
    lines = [f"s td {len(td.bags)} {td.width + 1} {n_vertices}"]
    for i, bag in enumerate(td.bags, start=1):
        lines.append("b {} {}".format(i, " ".join(map(str, sorted(bag)))).rstrip())
    for i, p in enumerate(td.parent):
        if p >= 0:
            lines.append(f"{p + 1} {i + 1}")
    return "\n".join(lines) + "\n"
