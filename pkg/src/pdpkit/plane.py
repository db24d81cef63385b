"""Embedded planar multigraphs: rotation systems, faces, duals, radial completions.

Everything is combinatorial.  A graph is a set of integer vertex ids, an edge
table mapping edge id -> (u, v), and per vertex the clockwise cyclic order of
incident darts.  A dart is an edge-end, encoded as the integer 2*edge_id + end
(end 0 sits at u, end 1 at v), so the reverse dart is just ``d ^ 1``.  Faces
are the orbits of the next-dart rule and lie to the LEFT of each dart in their
boundary walk.
"""

from __future__ import annotations

from dataclasses import dataclass

import networkx as nx

from .errors import MalformedRotationError, NonPlanarError


def dart(edge_id: int, end: int) -> int:
    return 2 * edge_id + end


def dart_edge(d: int) -> int:
    return d >> 1


def dart_end(d: int) -> int:
    return d & 1


def dart_reverse(d: int) -> int:
    return d ^ 1


@dataclass(frozen=True)
class Face:
    """One face of the embedding: a cyclic dart walk, face kept on the left."""

    id: int
    darts: tuple[int, ...]

    @property
    def length(self) -> int:
        return len(self.darts)


class PlaneGraph:
    """Immutable embedded multigraph.  Parallel edges and loops are allowed.

    The constructor validates the rotation system (every dart listed exactly
    once at its own vertex) and checks Euler's formula per connected
    component, rejecting rotation systems of positive genus.
    """

    __slots__ = (
        "vertices",
        "edges",
        "rotation",
        "outer_face",
        "_faces",
        "_face_of",
        "_next_at_vertex",
    )

    def __init__(self, vertices, edges, rotation, outer_face=None):
        self.vertices: tuple[int, ...] = tuple(sorted(vertices))
        self.edges: dict[int, tuple[int, int]] = {e: (u, v) for e, (u, v) in sorted(edges.items())}
        vset = set(self.vertices)
        if len(vset) != len(self.vertices):
            raise MalformedRotationError("duplicate vertex ids")
        for e, (u, v) in self.edges.items():
            if u not in vset or v not in vset:
                raise MalformedRotationError(f"edge {e} has endpoint outside vertex set")

        rot = {v: tuple(rotation.get(v, ())) for v in self.vertices}
        if set(rotation) - vset:
            raise MalformedRotationError("rotation given for unknown vertex")
        self._check_darts(rot)
        # Normalize each cyclic list to start at its smallest dart so that
        # equality and serialization are canonical.
        self.rotation: dict[int, tuple[int, ...]] = {
            v: _rotate_min(seq) for v, seq in rot.items()
        }

        succ = {}
        for seq in self.rotation.values():
            n = len(seq)
            for i, d in enumerate(seq):
                succ[d] = seq[(i + 1) % n]
        self._next_at_vertex: dict[int, int] = succ

        self._faces: tuple[Face, ...] = self._trace_faces()
        self._face_of: dict[int, int] = {}
        for f in self._faces:
            for d in f.darts:
                self._face_of[d] = f.id
        self._check_euler()

        if outer_face is None:
            outer_face = self._default_outer()
        elif not 0 <= outer_face < len(self._faces):
            raise MalformedRotationError(f"outer face id {outer_face} out of range")
        self.outer_face: int = outer_face

    # -- construction helpers ------------------------------------------------

    def _check_darts(self, rot):
        expected: dict[int, int] = {}
        for e, (u, v) in self.edges.items():
            expected[dart(e, 0)] = u
            expected[dart(e, 1)] = v
        seen = set()
        for v, seq in rot.items():
            for d in seq:
                if d not in expected:
                    raise MalformedRotationError(f"unknown dart {d} at vertex {v}")
                if expected[d] != v:
                    raise MalformedRotationError(
                        f"dart {d} of edge {dart_edge(d)} listed at {v}, belongs at {expected[d]}"
                    )
                if d in seen:
                    raise MalformedRotationError(f"dart {d} listed twice")
                seen.add(d)
        missing = set(expected) - seen
        if missing:
            raise MalformedRotationError(f"darts missing from rotation: {sorted(missing)}")

    def _trace_faces(self):
        faces = []
        assigned = set()
        for d0 in sorted(self._next_at_vertex):
            if d0 in assigned:
                continue
            walk = []
            d = d0
            while True:
                walk.append(d)
                assigned.add(d)
                d = self._next_at_vertex[dart_reverse(d)]
                if d == d0:
                    break
            faces.append(Face(len(faces), tuple(walk)))
        if not self.edges:
            # An edgeless graph still has the one face of the whole plane.
            faces.append(Face(0, ()))
        return tuple(faces)

    def _check_euler(self):
        # Per connected component with edges: orbits == E - V + 2 iff genus 0.
        comp = {v: v for v in self.vertices}

        def find(x):
            while comp[x] != x:
                comp[x] = comp[comp[x]]
                x = comp[x]
            return x

        for u, v in self.edges.values():
            ru, rv = find(u), find(v)
            if ru != rv:
                comp[ru] = rv
        counts: dict[int, list[int]] = {}
        for v in self.vertices:
            counts.setdefault(find(v), [0, 0, 0])[0] += 1
        for e, (u, _) in self.edges.items():
            counts[find(u)][1] += 1
        for f in self._faces:
            if f.darts:
                tail = self.dart_tail(f.darts[0])
                counts[find(tail)][2] += 1
        for root, (nv, ne, nf) in counts.items():
            if ne == 0:
                continue
            if nf != ne - nv + 2:
                raise NonPlanarError(
                    f"rotation system is not planar: component of {root} has "
                    f"V={nv} E={ne} but {nf} face orbits"
                )

    def _default_outer(self):
        # Longest face; ties broken by the smallest dart it contains.
        best = None
        for f in self._faces:
            key = (-f.length, min(f.darts) if f.darts else -1)
            if best is None or key < best[0]:
                best = (key, f.id)
        return best[1]

    # -- basic accessors -----------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def m(self) -> int:
        return len(self.edges)

    def dart_tail(self, d: int) -> int:
        return self.edges[dart_edge(d)][dart_end(d)]

    def dart_head(self, d: int) -> int:
        return self.edges[dart_edge(d)][1 - dart_end(d)]

    def degree(self, v: int) -> int:
        return len(self.rotation[v])

    def faces(self) -> tuple[Face, ...]:
        return self._faces

    def face_of(self, d: int) -> int:
        """Id of the face on the left of dart d."""
        return self._face_of[d]

    def left_face(self, d: int) -> int:
        return self._face_of[d]

    def right_face(self, d: int) -> int:
        return self._face_of[dart_reverse(d)]

    def neighbors(self, v: int) -> list[int]:
        """Adjacent vertices, deduplicated, ordered by smallest connecting edge id."""
        seen = {}
        for d in sorted(self.rotation[v], key=dart_edge):
            w = self.dart_head(d)
            if w != v and w not in seen:
                seen[w] = None
        return list(seen)

    def adjacency(self) -> dict[int, list[int]]:
        return {v: self.neighbors(v) for v in self.vertices}

    def incident_edges(self, v: int) -> list[int]:
        return sorted({dart_edge(d) for d in self.rotation[v]})

    def connected_components(self) -> list[set[int]]:
        seen = set()
        comps = []
        adj = self.adjacency()
        for v in self.vertices:
            if v in seen:
                continue
            comp = {v}
            stack = [v]
            seen.add(v)
            while stack:
                x = stack.pop()
                for w in adj[x]:
                    if w not in seen:
                        seen.add(w)
                        comp.add(w)
                        stack.append(w)
            comps.append(comp)
        return comps

    def is_connected(self) -> bool:
        return len(self.connected_components()) <= 1

    # -- equality ------------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, PlaneGraph):
            return NotImplemented
        return (
            self.vertices == other.vertices
            and self.edges == other.edges
            and self.rotation == other.rotation
            and self.outer_face == other.outer_face
        )

    def __hash__(self):
        return hash((self.vertices, tuple(self.edges.items()), self.outer_face))

    def __repr__(self):
        return f"PlaneGraph(n={self.n}, m={self.m}, faces={len(self._faces)})"


def _rotate_min(seq: tuple[int, ...]) -> tuple[int, ...]:
    if not seq:
        return seq
    i = seq.index(min(seq))
    return seq[i:] + seq[:i]


# ---------------------------------------------------------------------------
# Public constructors
# ---------------------------------------------------------------------------


def build_embedded(vertex_count, edge_list, rotations=None, outer_dart=None) -> PlaneGraph:
    """Build a PlaneGraph on vertices 1..vertex_count.

    ``edge_list`` is either a list of (u, v) pairs (edge ids assigned 1..m in
    order) or a mapping edge_id -> (u, v).  ``rotations``, when given, maps
    each vertex to the clockwise list of incident edge ids (a loop id appears
    twice; its first occurrence is taken as end 0).  When ``rotations`` is
    omitted a planar embedding is computed, and non-planar input is rejected.

    ``outer_dart`` optionally designates the outer face as the face to the
    left of that dart.
    """
    vertices = range(1, vertex_count + 1)
    if isinstance(edge_list, dict):
        edges = {int(e): (int(u), int(v)) for e, (u, v) in edge_list.items()}
    else:
        edges = {i + 1: (int(u), int(v)) for i, (u, v) in enumerate(edge_list)}
    for e, (u, v) in edges.items():
        if not (1 <= u <= vertex_count and 1 <= v <= vertex_count):
            raise MalformedRotationError(f"edge {e}=({u},{v}) endpoint out of range")

    if rotations is not None:
        rot = {v: _edge_ids_to_darts(v, ids, edges) for v, ids in rotations.items()}
    else:
        rot = _compute_embedding(vertex_count, edges)

    outer = None
    graph = PlaneGraph(vertices, edges, rot)
    if outer_dart is not None:
        outer = graph.face_of(outer_dart)
        graph = PlaneGraph(vertices, edges, rot, outer_face=outer)
    return graph


def _edge_ids_to_darts(v, ids, edges):
    darts = []
    seen_loop_once = set()
    for e in ids:
        if e not in edges:
            raise MalformedRotationError(f"rotation at {v} names unknown edge {e}")
        u, w = edges[e]
        if u == w:  # loop: first listing is end 0, second end 1
            if e in seen_loop_once:
                darts.append(dart(e, 1))
            else:
                darts.append(dart(e, 0))
                seen_loop_once.add(e)
        elif u == v:
            darts.append(dart(e, 0))
        elif w == v:
            darts.append(dart(e, 1))
        else:
            raise MalformedRotationError(f"edge {e} in rotation of {v} is not incident to it")
    return darts


def _compute_embedding(n, edges):
    """Planar rotation system for arbitrary multigraphs via the simple skeleton."""
    simple = nx.Graph()
    simple.add_nodes_from(range(1, n + 1))
    groups: dict[tuple[int, int], list[int]] = {}
    loops: dict[int, list[int]] = {}
    for e, (u, v) in sorted(edges.items()):
        if u == v:
            loops.setdefault(u, []).append(e)
        else:
            key = (min(u, v), max(u, v))
            groups.setdefault(key, []).append(e)
            simple.add_edge(*key)
    is_planar, embedding = nx.check_planarity(simple)
    if not is_planar:
        raise NonPlanarError("edge list is not planar")
    data = embedding.get_data()

    rot = {}
    for v in range(1, n + 1):
        darts = []
        for w in data.get(v, []):
            key = (min(v, w), max(v, w))
            group = groups[key]
            # Parallel copies fan out side by side: ascending ids at the low
            # endpoint, descending at the high one, so copies pair into bigons.
            ordered = group if v == key[0] else list(reversed(group))
            for e in ordered:
                end = 0 if edges[e][0] == v else 1
                darts.append(dart(e, end))
        for e in loops.get(v, []):
            darts.append(dart(e, 0))
            darts.append(dart(e, 1))
        rot[v] = darts
    return rot


# ---------------------------------------------------------------------------
# Derived graphs
# ---------------------------------------------------------------------------


def dual(graph: PlaneGraph) -> PlaneGraph:
    """Planar dual: one vertex per face, one edge per primal edge.

    Dual edge e joins the left face of dart (e,0) to the left face of
    (e,1); the rotation at a dual vertex is the primal face walk, so dart
    integers keep their meaning across the duality.
    """
    dual_edges = {
        e: (graph.face_of(dart(e, 0)), graph.face_of(dart(e, 1))) for e in graph.edges
    }
    rotation = {f.id: list(f.darts) for f in graph.faces()}
    return PlaneGraph([f.id for f in graph.faces()], dual_edges, rotation)


@dataclass(frozen=True)
class RadialMap:
    """Bookkeeping for a radial completion."""

    original_vertices: frozenset[int]
    face_vertex: dict[int, int]       # face id -> new vertex id
    radial_edges: frozenset[int]      # new edge ids
    radial_edge_face: dict[int, int]  # new edge id -> face id it serves

    def is_face_vertex(self, v: int) -> bool:
        return v not in self.original_vertices


def radial_completion(graph: PlaneGraph) -> tuple[PlaneGraph, RadialMap]:
    """Place a vertex in every face and join it to each incidence of the walk.

    A face of length L contributes L radial edges (one per boundary dart, so
    a vertex visited twice by the walk is joined twice).  Isolated vertices
    are treated as sitting in the outer face.
    """
    next_vid = max(graph.vertices) + 1 if graph.vertices else 1
    face_vertex = {}
    for f in graph.faces():
        face_vertex[f.id] = next_vid
        next_vid += 1

    next_eid = max(graph.edges) + 1 if graph.edges else 1
    edges = dict(graph.edges)
    radial_of_dart = {}           # boundary dart -> its radial edge id
    radial_edge_face = {}
    radial_at_face: dict[int, list[int]] = {f.id: [] for f in graph.faces()}

    for f in graph.faces():
        fv = face_vertex[f.id]
        for d in f.darts:
            eid = next_eid
            next_eid += 1
            edges[eid] = (graph.dart_tail(d), fv)
            radial_of_dart[d] = eid
            radial_edge_face[eid] = f.id
            radial_at_face[f.id].append(eid)

    isolated = [v for v in graph.vertices if graph.degree(v) == 0]
    for v in isolated:
        eid = next_eid
        next_eid += 1
        f = graph.outer_face if graph.edges else 0
        edges[eid] = (v, face_vertex[f])
        radial_edge_face[eid] = f
        radial_at_face[f].append(eid)

    rotation = {}
    for v in graph.vertices:
        seq = []
        for d in graph.rotation[v]:
            # The corner entered just before leaving along d belongs to the
            # face left of d, whose walk contains d; that walk dart owns the
            # radial edge landing in this corner.
            seq.append(dart(radial_of_dart[d], 0))
            seq.append(d)
        if not seq and v in isolated:
            f = graph.outer_face if graph.edges else 0
            for eid, (a, _) in edges.items():
                if eid in radial_edge_face and a == v:
                    seq.append(dart(eid, 0))
        rotation[v] = seq

    for f in graph.faces():
        fv = face_vertex[f.id]
        # Walking the face keeps it on the left, i.e. counterclockwise around
        # an inner face, so the clockwise order at the centre is the reverse.
        seq = [dart(e, 1) for e in reversed(radial_at_face[f.id])]
        rotation[fv] = seq

    vertices = list(graph.vertices) + [face_vertex[f.id] for f in graph.faces()]
    out = PlaneGraph(vertices, edges, rotation)
    rmap = RadialMap(
        original_vertices=frozenset(graph.vertices),
        face_vertex=face_vertex,
        radial_edges=frozenset(radial_edge_face),
        radial_edge_face=radial_edge_face,
    )
    return out, rmap


def multiply_edges(graph: PlaneGraph, c: int) -> tuple[PlaneGraph, dict[int, int]]:
    """Replace every edge by c parallel copies at consecutive rotation slots.

    Returns the new graph and a mapping new_edge_id -> original_edge_id.
    Copy 1 keeps the original id; extra copies get fresh ids above the
    current maximum.  c = 1 returns the graph unchanged.
    """
    if c < 1:
        raise ValueError("multiplicity must be >= 1")
    if c == 1:
        return graph, {e: e for e in graph.edges}

    next_eid = max(graph.edges) + 1 if graph.edges else 1
    copies: dict[int, list[int]] = {}
    origin: dict[int, int] = {}
    edges = {}
    for e, (u, v) in sorted(graph.edges.items()):
        ids = [e]
        origin[e] = e
        for _ in range(c - 1):
            ids.append(next_eid)
            origin[next_eid] = e
            next_eid += 1
        copies[e] = ids
        for eid in ids:
            edges[eid] = (u, v)

    rotation = {}
    for v in graph.vertices:
        seq = []
        for d in graph.rotation[v]:
            e, end = dart_edge(d), dart_end(d)
            fan = copies[e] if end == 0 else list(reversed(copies[e]))
            seq.extend(dart(eid, end) for eid in fan)
        rotation[v] = seq

    out = PlaneGraph(graph.vertices, edges, rotation)
    return out, origin


def delete_vertex(graph: PlaneGraph, v: int) -> PlaneGraph:
    """Remove a vertex and its incident edges; the embedding stays planar."""
    dead = {e for e, (a, b) in graph.edges.items() if a == v or b == v}
    edges = {e: ab for e, ab in graph.edges.items() if e not in dead}
    rotation = {
        w: [d for d in graph.rotation[w] if dart_edge(d) not in dead]
        for w in graph.vertices
        if w != v
    }
    return PlaneGraph([w for w in graph.vertices if w != v], edges, rotation)
