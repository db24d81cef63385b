"""Exact disjoint-paths solving by dynamic programming over a nice decomposition.

A table entry at a decomposition node describes how a partial routing below
that node meets the bag:

* role per bag vertex: unused, or (request, fragment degree 0/1/2),
* partner per bag vertex holding a fragment end: the other end of its
  fragment, which is another bag vertex, the vertex itself (a zero-length
  fragment), or an anchor marker meaning the far end is the already-forgotten
  source/target terminal,
* a bitmask of requests whose full path is already complete below.

Edges are committed when their first endpoint is forgotten (the other
endpoint is then still in the bag, so every edge is considered exactly once).
Terminals are capped at fragment degree 1 and interior vertices must reach
degree 2 before being forgotten.  Transitions are enumerated in a fixed
canonical order and the first derivation of a profile is kept, which makes
the returned solution deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ResourceLimitError
from .instances import Instance, Solution, verify_solution
from .treewidth import NiceTreeDecomposition

_ANCHOR_S = -2
_ANCHOR_T = -3
_NONE = -1


def _role(req: int, deg: int) -> int:
    return 1 + 3 * (req - 1) + deg


def _req_of(code: int) -> int:
    return (code - 1) // 3 + 1


def _deg_of(code: int) -> int:
    return (code - 1) % 3


@dataclass
class DpStats:
    nodes: int = 0
    total_states: int = 0
    max_profiles_per_node: int = 0
    per_node: list[int] = field(default_factory=list)


@dataclass
class DpConfig:
    max_states: int = 5_000_000


def profile_cap(width: int, k: int) -> int:
    """Per-node bound asserted in tests: (w+1)^(w+1) * 4^k."""
    return (width + 1) ** (width + 1) * 4 ** k


def solve_dp(instance: Instance, nice: NiceTreeDecomposition,
             config: DpConfig | None = None) -> Solution | None:
    solution, _ = solve_dp_with_stats(instance, nice, config)
    return solution


def solve_dp_with_stats(instance: Instance, nice: NiceTreeDecomposition,
                        config: DpConfig | None = None):
    config = config or DpConfig()
    k = instance.k
    g = instance.graph
    adj = {v: set(g.neighbors(v)) for v in g.vertices}
    source_req = {s: i for i, s in enumerate(instance.sources, start=1)}
    target_req = {t: i for i, t in enumerate(instance.targets, start=1)}

    def cap(v):
        return 1 if v in source_req or v in target_req else 2

    full_mask = (1 << k) - 1
    stats = DpStats(nodes=len(nice.nodes))
    tables: list[dict] = [None] * len(nice.nodes)
    backptr: list[dict] = [None] * len(nice.nodes)

    if k == 0:
        return Solution(paths=()), stats

    # Vertices whose forget node lies in the subtree of each node: edges of
    # the remaining graph G[V minus these] are exactly the ones still
    # undecided above, which drives the dead-profile prune.
    forgotten_below: list[frozenset] = [frozenset()] * len(nice.nodes)
    for idx, node in enumerate(nice.nodes):
        if node.kind == "forget":
            forgotten_below[idx] = forgotten_below[node.children[0]] | {node.vertex}
        elif node.kind == "introduce":
            forgotten_below[idx] = forgotten_below[node.children[0]]
        elif node.kind == "join":
            forgotten_below[idx] = (
                forgotten_below[node.children[0]] | forgotten_below[node.children[1]]
            )
    all_terminals = set(instance.sources) | set(instance.targets)
    own_terminals = [
        {instance.sources[i], instance.targets[i]} for i in range(k)
    ]

    for idx, node in enumerate(nice.nodes):
        bag = node.bag
        table: dict = {}
        back: dict = {}

        def put(profile, origin):
            if profile not in table:
                table[profile] = True
                back[profile] = origin

        if node.kind == "leaf":
            put(((), (), 0), ("leaf",))

        elif node.kind == "introduce":
            v = node.vertex
            p = bag.index(v)
            child = node.children[0]
            term_req = source_req.get(v) or target_req.get(v)
            for prof in tables[child]:
                roles, partners, done = prof
                new_partners = tuple(
                    q + 1 if q >= p else q for q in partners
                )
                base_roles = roles[:p] + (0,) + roles[p:]
                base_partners = new_partners[:p] + (_NONE,) + new_partners[p:]
                if term_req is None:
                    put((base_roles, base_partners, done), ("intro", prof))
                    for i in range(1, k + 1):
                        if done >> (i - 1) & 1:
                            continue
                        r = roles[:p] + (_role(i, 0),) + roles[p:]
                        q = new_partners[:p] + (p,) + new_partners[p:]
                        put((r, q, done), ("intro", prof))
                else:
                    # a terminal is forced onto its own request
                    if done >> (term_req - 1) & 1:
                        continue
                    r = roles[:p] + (_role(term_req, 0),) + roles[p:]
                    q = new_partners[:p] + (p,) + new_partners[p:]
                    put((r, q, done), ("intro", prof))

        elif node.kind == "forget":
            v = node.vertex
            child = node.children[0]
            child_bag = nice.nodes[child].bag
            p = child_bag.index(v)
            is_term = v in source_req or v in target_req
            anchor_code = _ANCHOR_S if v in source_req else _ANCHOR_T
            adj_positions = [
                j for j in range(len(child_bag)) if j != p and child_bag[j] in adj[v]
            ]
            pos_caps = [cap(child_bag[j]) for j in range(len(child_bag))]
            for prof in tables[child]:
                roles, partners, done = prof
                code = roles[p]
                if code == 0:
                    if is_term:
                        continue
                    put(_drop(roles, partners, p) + (done,), ("forget", prof, ()))
                    continue
                req = _req_of(code)
                deg = _deg_of(code)
                need = (1 if is_term else 2) - deg
                cands = [
                    j for j in adj_positions
                    if roles[j] != 0
                    and _req_of(roles[j]) == req
                    and _deg_of(roles[j]) < pos_caps[j]
                ]
                if need == 0:
                    combos = [()]
                elif need == 1:
                    combos = [(j,) for j in cands]
                else:
                    combos = [
                        (a, b) for ai, a in enumerate(cands) for b in cands[ai + 1:]
                    ]
                for combo in combos:
                    r = list(roles)
                    q = list(partners)
                    dn = [done]
                    if not _apply_edges(r, q, dn, p, combo, req):
                        continue
                    if not _finalize(r, q, dn, p, is_term, anchor_code, req, v, target_req):
                        continue
                    new_prof = _drop(tuple(r), tuple(q), p) + (dn[0],)
                    edges = tuple((child_bag[j], v, req) for j in combo)
                    put(new_prof, ("forget", prof, edges))

        else:  # join
            left, right = node.children
            caps = tuple(cap(v) for v in bag)
            size = len(bag)
            # Index the right table by role vector so a left profile only
            # ever sees role-compatible candidates instead of the full table.
            # Leaves carry the precomputed fragment list of each profile.
            trie: dict = {}
            for prof in tables[right]:
                tnode = trie
                for c in prof[0]:
                    tnode = tnode.setdefault(c, {})
                tnode.setdefault(None, []).append(
                    (prof, _material_mask(prof), _fragments(prof, size))
                )
            for prof1 in tables[left]:
                roles1 = prof1[0]
                done1 = prof1[2]
                mat1 = _material_mask(prof1)
                base1 = _splice_base(prof1, size)
                stack = [(trie, 0)]
                while stack:
                    tnode, depth = stack.pop()
                    if depth == size:
                        for prof2, mat2, frags2 in tnode[None]:
                            done2 = prof2[2]
                            if done1 & done2 or done1 & mat2 or done2 & mat1:
                                continue
                            merged = _merge(prof1, prof2, base1, frags2, size)
                            if merged is not None:
                                put(merged, ("join", prof1, prof2))
                        continue
                    c1 = roles1[depth]
                    if c1 == 0:
                        for c2, child in tnode.items():
                            if c2 is not None:
                                stack.append((child, depth + 1))
                    else:
                        child = tnode.get(0)
                        if child is not None:
                            stack.append((child, depth + 1))
                        base = 1 + 3 * ((c1 - 1) // 3)
                        room = caps[depth] - (c1 - 1) % 3
                        for d2 in range(room + 1):
                            child = tnode.get(base + d2)
                            if child is not None:
                                stack.append((child, depth + 1))

        if len(table) > 16:
            table = _prune_dead(
                table, bag, adj, forgotten_below[idx], instance,
                all_terminals, own_terminals,
            )
        tables[idx] = table
        backptr[idx] = back
        stats.per_node.append(len(table))
        stats.max_profiles_per_node = max(stats.max_profiles_per_node, len(table))
        stats.total_states += len(table)
        if stats.total_states > config.max_states:
            raise ResourceLimitError(
                f"state table exceeded {config.max_states} entries"
            )

    goal = ((), (), full_mask)
    if goal not in tables[nice.root]:
        return None, stats

    edges_by_req: dict[int, list[tuple[int, int]]] = {i: [] for i in range(1, k + 1)}
    stack = [(nice.root, goal)]
    while stack:
        idx, prof = stack.pop()
        origin = backptr[idx][prof]
        node = nice.nodes[idx]
        if origin[0] == "leaf":
            continue
        if origin[0] == "intro":
            stack.append((node.children[0], origin[1]))
        elif origin[0] == "forget":
            for u, v, req in origin[2]:
                edges_by_req[req].append((u, v))
            stack.append((node.children[0], origin[1]))
        else:
            stack.append((node.children[0], origin[1]))
            stack.append((node.children[1], origin[2]))

    paths = []
    for i in range(1, k + 1):
        paths.append(_walk_path(instance.sources[i - 1], instance.targets[i - 1],
                                edges_by_req[i]))
    solution = Solution(paths=tuple(paths))
    if not verify_solution(instance, solution):
        raise RuntimeError("internal error: DP produced an invalid solution")
    return solution, stats


# ---------------------------------------------------------------------------
# Profile surgery
# ---------------------------------------------------------------------------


def _drop(roles, partners, p):
    new_roles = roles[:p] + roles[p + 1:]
    new_partners = tuple(
        q - 1 if q > p else q
        for j, q in enumerate(partners)
        if j != p
    )
    return new_roles, new_partners


def _apply_edges(roles, partners, done, p, combo, req) -> bool:
    for j in combo:
        if partners[p] == j:  # would close a cycle within one fragment
            return False
        if not _add_edge(roles, partners, done, p, j, req):
            return False
    return True


def _add_edge(roles, partners, done, pu, pv, req) -> bool:
    eu = partners[pu]
    ev = partners[pv]
    du = _deg_of(roles[pu]) + 1
    dv = _deg_of(roles[pv]) + 1
    roles[pu] = _role(req, du)
    roles[pv] = _role(req, dv)
    if du == 2:
        partners[pu] = _NONE
    if dv == 2:
        partners[pv] = _NONE
    e1 = eu  # far end on u's side (== pu itself when u had degree 0)
    e2 = ev
    if e1 < 0 and e2 < 0:  # both anchors: the path closed source-to-target
        if {e1, e2} != {_ANCHOR_S, _ANCHOR_T}:
            return False
        done[0] |= 1 << (req - 1)
        return True
    if e1 >= 0:
        partners[e1] = e2
    if e2 >= 0:
        partners[e2] = e1
    return True


def _finalize(roles, partners, done, p, is_term, anchor_code, req, v, target_req) -> bool:
    deg = _deg_of(roles[p])
    if is_term:
        if deg != 1:
            return False
        q = partners[p]
        if q >= 0 and q != p:
            partners[q] = anchor_code
        elif q in (_ANCHOR_S, _ANCHOR_T):
            if q == anchor_code:
                return False  # two fragments hanging off the same terminal
            done[0] |= 1 << (req - 1)
        else:
            return False
        return True
    if deg != 2:
        return False
    return partners[p] == _NONE


def _prune_dead(table, bag, adj, forgotten, instance, all_terminals, own_terminals):
    """Drop profiles that provably cannot extend to a solution.

    For every unfinished request, its open fragment ends and not-yet-placed
    terminals must sit in one connected component of the undecided part of
    the graph, with used-by-other-request bag vertices removed and existing
    fragments acting as shortcuts between their two ends.  The usable region
    is a superset of what any completion may touch, so nothing viable is ever
    pruned.  Component labelings are memoized by (request, excluded bag
    positions), which keeps the pass near-linear in the table size.
    """
    k = instance.k
    size = len(bag)
    alive = [v for v in instance.graph.vertices if v not in forgotten]
    comp_memo: dict = {}

    def components(req_idx, xmask):
        key = (req_idx, xmask)
        labels = comp_memo.get(key)
        if labels is not None:
            return labels
        blocked = set(all_terminals) - own_terminals[req_idx]
        m = xmask
        while m:
            low = m & -m
            blocked.add(bag[low.bit_length() - 1])
            m ^= low
        labels = {}
        comp = 0
        for v0 in alive:
            if v0 in labels or v0 in blocked or v0 in forgotten:
                continue
            comp += 1
            stack = [v0]
            labels[v0] = comp
            while stack:
                x = stack.pop()
                for w in adj[x]:
                    if w not in labels and w not in blocked and w not in forgotten:
                        labels[w] = comp
                        stack.append(w)
        comp_memo[key] = labels
        return labels

    sources = instance.sources
    targets = instance.targets
    out = {}
    for prof in table:
        roles, partners, done = prof
        ends = [[] for _ in range(k)]
        links = [[] for _ in range(k)]
        xmask_of = [0] * k
        for p in range(size):
            c = roles[p]
            if not c:
                continue
            i = (c - 1) // 3
            d = (c - 1) % 3
            for j in range(k):
                if j != i:
                    xmask_of[j] |= 1 << p
            if d == 2:
                xmask_of[i] |= 1 << p
            else:
                ends[i].append(bag[p])
                q = partners[p]
                if 0 <= q < p:  # record each position pair once
                    links[i].append((bag[p], bag[q]))
        ok = True
        for i in range(k):
            if done >> i & 1:
                continue
            items = list(ends[i])
            s, t = sources[i], targets[i]
            if s not in forgotten and s not in bag:
                items.append(s)
            if t not in forgotten and t not in bag:
                items.append(t)
            if len(items) <= 1:
                continue
            labels = components(i, xmask_of[i])
            try:
                comp_ids = [labels[v] for v in items]
            except KeyError:
                ok = False
                break
            if len(set(comp_ids)) > 1:
                # fragments may bridge components before the final check
                root: dict = {}

                def find(x):
                    while root.get(x, x) != x:
                        root[x] = root.get(root[x], root[x])
                        x = root[x]
                    return x

                for a, b in links[i]:
                    ra, rb = find(labels[a]), find(labels[b])
                    if ra != rb:
                        root[ra] = rb
                if len({find(c) for c in comp_ids}) > 1:
                    ok = False
                    break
        if ok:
            out[prof] = True
    return out


def _material_mask(prof):
    """Bitmask of requests that have any role in the bag."""
    material = 0
    for c in prof[0]:
        if c:
            material |= 1 << ((c - 1) // 3)
    return material


def _fragments(prof, size):
    """Open fragments of a profile as (end, other_end) pairs.

    Position-position fragments are listed once; anchored fragments carry the
    anchor code as the second element.
    """
    roles, partners, _ = prof
    out = []
    for i in range(size):
        c = roles[i]
        if c and (c - 1) % 3 == 1:
            q = partners[i]
            if q < 0 or i < q:
                out.append((i, q))
    return tuple(out)


def _splice_base(prof, size):
    """Partner array primed for splicing: unused positions point at themselves."""
    roles, partners, _ = prof
    return [partners[i] if roles[i] else i for i in range(size)]


def _merge(p1, p2, base1, frags2, size):
    """Join merge; per-position role compatibility is guaranteed by the trie.

    The right side's fragments are spliced one by one into the left side's
    pairing, exactly like adding virtual edges between their two ends: a
    splice whose ends already share a fragment would close a cycle, and a
    splice joining a source anchor to a target anchor completes that request.
    """
    roles1, partners1, done1 = p1
    roles2, partners2, done2 = p2
    done = done1 | done2
    cur = base1.copy()

    for a, b in frags2:
        e1 = cur[a]
        if e1 == b:
            return None  # both ends on one existing fragment: cycle
        e2 = cur[b] if b >= 0 else b
        if e1 < 0 and e2 < 0:
            if e1 == e2:
                return None  # source-source or target-target closure
            req = (roles2[a] - 1) // 3
            bit = 1 << req
            if done & bit:
                return None
            done |= bit
        else:
            if e1 >= 0:
                cur[e1] = e2
            if e2 >= 0:
                cur[e2] = e1
    roles = [
        c1 if not c2 else (c2 if not c1 else c1 + (c2 - 1) % 3)
        for c1, c2 in zip(roles1, roles2)
    ]
    partners = []
    anchors_seen = 0
    for i in range(size):
        c = roles[i]
        if c == 0:
            partners.append(_NONE)
            continue
        d = (c - 1) % 3
        if d == 2:
            partners.append(_NONE)
        elif d == 0:
            partners.append(i)
        else:
            q = cur[i]
            partners.append(q)
            if q < 0:
                # guard: one anchor per request and kind across the profile
                bit = 1 << (2 * ((c - 1) // 3) + (0 if q == _ANCHOR_S else 1))
                if anchors_seen & bit:
                    return None
                anchors_seen |= bit
    return tuple(roles), tuple(partners), done


def _walk_path(source, target, edges):
    nbrs: dict[int, list[int]] = {}
    for u, v in edges:
        nbrs.setdefault(u, []).append(v)
        nbrs.setdefault(v, []).append(u)
    path = [source]
    prev = None
    cur = source
    while cur != target:
        options = [w for w in nbrs[cur] if w != prev]
        if len(options) != 1:
            raise RuntimeError("internal error: request edges do not form a path")
        prev, cur = cur, options[0]
        path.append(cur)
    return tuple(path)
