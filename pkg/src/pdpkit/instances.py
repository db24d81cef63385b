"""Problem instances, solutions, the text format, generators, verification.

Instance text format (UTF-8, line based, ``#`` starts a comment):

    p pdp <n> <m> <k>
    e <edge-id> <u> <v>
    rot <v> <edge-id>...        # optional, all vertices or none
    t <i> <s_i> <t_i>           # i = 1..k
    outer <edge-id> <L|R>       # optional outer-face designation

Solutions are one ``path <i> <v1> <v2> ...`` line per request.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidTerminalError, ParseError, ValidationError
from .plane import PlaneGraph, build_embedded, dart, dart_edge, dart_end

try:
    from scipy.spatial import Delaunay
except ImportError:  # pragma: no cover
    Delaunay = None


@dataclass(frozen=True)
class Instance:
    """(G, S, T, g, k): terminal i must be joined from sources[i] to targets[i]."""

    graph: PlaneGraph
    sources: tuple[int, ...]
    targets: tuple[int, ...]

    def __post_init__(self):
        if len(self.sources) != len(self.targets):
            raise ValidationError("sources and targets differ in length")
        terms = list(self.sources) + list(self.targets)
        if len(set(terms)) != len(terms):
            raise ValidationError("terminals are not pairwise distinct")
        vset = set(self.graph.vertices)
        for t in terms:
            if t not in vset:
                raise ValidationError(f"terminal {t} is not a graph vertex")
        for e, (u, v) in self.graph.edges.items():
            if u == v:
                raise ValidationError(f"instance graph has loop edge {e}")

    @property
    def k(self) -> int:
        return len(self.sources)

    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.sources, self.targets))


@dataclass(frozen=True)
class Solution:
    """One vertex sequence per request, path i from sources[i] to targets[i]."""

    paths: tuple[tuple[int, ...], ...]


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


def check_solution(instance: Instance, solution: Solution) -> str | None:
    """None when valid, otherwise a human-readable reason."""
    if len(solution.paths) != instance.k:
        return f"expected {instance.k} paths, got {len(solution.paths)}"
    adj = {v: set(instance.graph.neighbors(v)) for v in instance.graph.vertices}
    used: set[int] = set()
    for i, path in enumerate(solution.paths):
        s, t = instance.sources[i], instance.targets[i]
        if len(path) < 2:
            return f"path {i + 1} has fewer than two vertices"
        if path[0] != s or path[-1] != t:
            return f"path {i + 1} does not run from {s} to {t}"
        if len(set(path)) != len(path):
            return f"path {i + 1} repeats a vertex"
        for a, b in zip(path, path[1:]):
            if a not in adj or b not in adj[a]:
                return f"path {i + 1} uses non-edge {a}-{b}"
        overlap = used.intersection(path)
        if overlap:
            return f"path {i + 1} shares vertex {min(overlap)} with an earlier path"
        used.update(path)
    return None


def verify_solution(instance: Instance, solution: Solution) -> bool:
    return check_solution(instance, solution) is None


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------


def _content_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def parse_instance(text: str) -> Instance:
    header = None
    edges: dict[int, tuple[int, int]] = {}
    rotations: dict[int, list[int]] = {}
    pairs: dict[int, tuple[int, int]] = {}
    outer = None

    for lineno, tok in _content_lines(text):
        kind = tok[0]
        try:
            if kind == "p":
                if header is not None:
                    raise ParseError(f"line {lineno}: duplicate header")
                if len(tok) != 5 or tok[1] != "pdp":
                    raise ParseError(f"line {lineno}: header must be 'p pdp n m k'")
                header = (int(tok[2]), int(tok[3]), int(tok[4]))
            elif kind == "e":
                if len(tok) != 4:
                    raise ParseError(f"line {lineno}: edge line needs id u v")
                e, u, v = int(tok[1]), int(tok[2]), int(tok[3])
                if e in edges:
                    raise ParseError(f"line {lineno}: duplicate edge id {e}")
                edges[e] = (u, v)
            elif kind == "rot":
                v = int(tok[1])
                if v in rotations:
                    raise ParseError(f"line {lineno}: duplicate rotation for {v}")
                rotations[v] = [int(x) for x in tok[2:]]
            elif kind == "t":
                if len(tok) != 4:
                    raise ParseError(f"line {lineno}: terminal line needs i s t")
                i, s, t = int(tok[1]), int(tok[2]), int(tok[3])
                if i in pairs:
                    raise ParseError(f"line {lineno}: duplicate terminal index {i}")
                pairs[i] = (s, t)
            elif kind == "outer":
                if len(tok) != 3 or tok[2] not in ("L", "R"):
                    raise ParseError(f"line {lineno}: outer line needs edge-id L|R")
                outer = (int(tok[1]), tok[2])
            else:
                raise ParseError(f"line {lineno}: unknown line kind {kind!r}")
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc

    if header is None:
        raise ParseError("missing 'p pdp' header")
    n, m, k = header
    if n < 0 or m < 0 or k < 0:
        raise ParseError("header counts must be nonnegative")
    if len(edges) != m:
        raise ParseError(f"header declares {m} edges, found {len(edges)}")
    if sorted(pairs) != list(range(1, k + 1)):
        raise ParseError(f"header declares {k} pairs, found indices {sorted(pairs)}")

    for e, (u, v) in edges.items():
        if not (1 <= u <= n and 1 <= v <= n) or e < 1:
            raise ValidationError(f"edge {e}=({u},{v}) out of range")
    if rotations:
        degree: dict[int, int] = {}
        for u, v in edges.values():
            degree[u] = degree.get(u, 0) + 1
            degree[v] = degree.get(v, 0) + 1
        needed = {v for v, d in degree.items() if d > 0}
        if not needed <= set(rotations):
            raise ParseError("rotations are all-or-none: some vertices missing")
        rot_arg = rotations
    else:
        rot_arg = None

    outer_dart = None
    if outer is not None:
        e, side = outer
        if e not in edges:
            raise ValidationError(f"outer line references unknown edge {e}")
        outer_dart = dart(e, 0 if side == "L" else 1)

    from .errors import NonPlanarError, MalformedRotationError

    try:
        graph = build_embedded(n, edges, rotations=rot_arg, outer_dart=outer_dart)
    except (NonPlanarError, MalformedRotationError) as exc:
        raise ValidationError(str(exc)) from exc

    sources = tuple(pairs[i][0] for i in range(1, k + 1))
    targets = tuple(pairs[i][1] for i in range(1, k + 1))
    return Instance(graph=graph, sources=sources, targets=targets)


def serialize_instance(instance: Instance) -> str:
    g = instance.graph
    lines = [f"p pdp {g.n} {g.m} {instance.k}"]
    for e in sorted(g.edges):
        u, v = g.edges[e]
        lines.append(f"e {e} {u} {v}")
    for v in g.vertices:
        ids = " ".join(str(dart_edge(d)) for d in g.rotation[v])
        if ids:
            lines.append(f"rot {v} {ids}")
    for i, (s, t) in enumerate(instance.pairs(), start=1):
        lines.append(f"t {i} {s} {t}")
    outer_face = g.faces()[g.outer_face]
    if outer_face.darts:
        d = min(outer_face.darts)
        side = "L" if dart_end(d) == 0 else "R"
        lines.append(f"outer {dart_edge(d)} {side}")
    return "\n".join(lines) + "\n"


def parse_solution(text: str, k: int | None = None) -> Solution:
    paths: dict[int, tuple[int, ...]] = {}
    for lineno, tok in _content_lines(text):
        if tok[0] != "path":
            raise ParseError(f"line {lineno}: expected 'path i v1 v2 ...'")
        try:
            i = int(tok[1])
            verts = tuple(int(x) for x in tok[2:])
        except (ValueError, IndexError) as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
        if i in paths:
            raise ParseError(f"line {lineno}: duplicate path index {i}")
        paths[i] = verts
    count = k if k is not None else (max(paths) if paths else 0)
    if sorted(paths) != list(range(1, count + 1)):
        raise ParseError(f"path indices {sorted(paths)} do not cover 1..{count}")
    return Solution(paths=tuple(paths[i] for i in range(1, count + 1)))


def serialize_solution(solution: Solution) -> str:
    lines = [
        "path {} {}".format(i, " ".join(map(str, p)))
        for i, p in enumerate(solution.paths, start=1)
    ]
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


def _grid_vertex(r, c, cols):
    return (r - 1) * cols + c


def gen_grid(rows: int, cols: int, pairs) -> Instance:
    """rows x cols grid with N, E, S, W clockwise rotations.

    Pair endpoints may be vertex ids or (row, col) tuples.
    """
    if rows < 2 or cols < 2:
        raise InvalidTerminalError("grid needs rows, cols >= 2")
    n = rows * cols

    def resolve(p):
        if isinstance(p, tuple):
            r, c = p
            if not (1 <= r <= rows and 1 <= c <= cols):
                raise InvalidTerminalError(f"grid position {p} out of range")
            return _grid_vertex(r, c, cols)
        v = int(p)
        if not 1 <= v <= n:
            raise InvalidTerminalError(f"vertex {v} out of range")
        return v

    east: dict[tuple[int, int], int] = {}
    south: dict[tuple[int, int], int] = {}
    edges = {}
    eid = 1
    for r in range(1, rows + 1):
        for c in range(1, cols + 1):
            if c < cols:
                east[(r, c)] = eid
                edges[eid] = (_grid_vertex(r, c, cols), _grid_vertex(r, c + 1, cols))
                eid += 1
            if r < rows:
                south[(r, c)] = eid
                edges[eid] = (_grid_vertex(r, c, cols), _grid_vertex(r + 1, c, cols))
                eid += 1

    rotations = {}
    for r in range(1, rows + 1):
        for c in range(1, cols + 1):
            order = []
            if r > 1:
                order.append(south[(r - 1, c)])   # north neighbour
            if c < cols:
                order.append(east[(r, c)])        # east
            if r < rows:
                order.append(south[(r, c)])       # south
            if c > 1:
                order.append(east[(r, c - 1)])    # west
            rotations[_grid_vertex(r, c, cols)] = order

    resolved = [(resolve(a), resolve(b)) for a, b in pairs]
    for a, b in resolved:
        if a == b:
            raise InvalidTerminalError(f"pair endpoints coincide at {a}")
    graph = build_embedded(n, edges, rotations=rotations)
    try:
        return Instance(
            graph=graph,
            sources=tuple(a for a, _ in resolved),
            targets=tuple(b for _, b in resolved),
        )
    except ValidationError as exc:
        raise InvalidTerminalError(str(exc)) from exc


def gen_random_planar(n: int, k: int, seed: int) -> Instance:
    """Connected random planar instance: thinned Delaunay triangulation.

    Deterministic in (n, k, seed).  Rotations come from sorting neighbours by
    angle, so the embedding matches the underlying point set.
    """
    if n < 2 * k + 2:
        raise ValidationError(f"need n >= 2k+2, got n={n}, k={k}")
    if Delaunay is None:  # pragma: no cover
        raise RuntimeError("scipy is required for gen_random_planar")
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2))
    tri = Delaunay(pts)
    edge_set = set()
    for simplex in tri.simplices:
        a, b, c = (int(x) for x in simplex)
        edge_set.update({(min(a, b), max(a, b)), (min(b, c), max(b, c)), (min(a, c), max(a, c))})
    edge_list = sorted(edge_set)

    adj: dict[int, set[int]] = {v: set() for v in range(n)}
    for u, v in edge_list:
        adj[u].add(v)
        adj[v].add(u)

    def connected_without(u, v):
        adj[u].discard(v)
        adj[v].discard(u)
        seen = {0}
        stack = [0]
        while stack:
            x = stack.pop()
            for w in adj[x]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        ok = len(seen) == n
        if not ok:
            adj[u].add(v)
            adj[v].add(u)
        return ok

    order = rng.permutation(len(edge_list))
    kept = set(edge_list)
    for idx in order:
        u, v = edge_list[int(idx)]
        if rng.random() < 0.35 and connected_without(u, v):
            kept.discard((u, v))

    edges = {i + 1: (u + 1, v + 1) for i, (u, v) in enumerate(sorted(kept))}
    incident: dict[int, list[int]] = {v + 1: [] for v in range(n)}
    for e, (u, v) in edges.items():
        incident[u].append(e)
        incident[v].append(e)

    rotations = {}
    for v in range(1, n + 1):
        p = pts[v - 1]

        def angle(e):
            u, w = edges[e]
            other = w if u == v else u
            q = pts[other - 1]
            return float(np.arctan2(q[1] - p[1], q[0] - p[0]))

        # clockwise = decreasing angle
        rotations[v] = sorted(incident[v], key=lambda e: (-angle(e), e))

    terms = rng.choice(n, size=2 * k, replace=False) if k else np.array([], dtype=int)
    sources = tuple(int(t) + 1 for t in terms[:k])
    targets = tuple(int(t) + 1 for t in terms[k:])
    graph = build_embedded(n, edges, rotations=rotations)
    return Instance(graph=graph, sources=sources, targets=targets)
