"""Free-group words over the request alphabet, flows on arcs, homology testing.

A letter is a nonzero int: +i stands for the i-th request's sink symbol and
-i for its inverse.  Words are stored fully reduced (no adjacent cancelling
pair).  Arcs reuse the dart encoding of :mod:`pdpkit.plane`: arc ``2e`` runs
along edge e from its first endpoint, arc ``2e+1`` the other way, so every
undirected edge carries two independently-labelled arcs.

Orientation conventions, fixed once and used consistently:

* ``vertex_trace`` walks the rotation clockwise from its first dart; at each
  incidence it appends the inverted word of the ingoing arc and then the word
  of the outgoing arc.
* The two arcs of an edge are drawn as parallel curves with a thin corridor
  between them, which puts the corridor on the *left* of both arcs.  Face
  relabelling therefore conjugates both arcs of edge e on the left by the
  label of the face left of the canonical arc ``2e``; on the right each arc
  sees its own real right face.  With this convention a relabelling changes
  every vertex trace by conjugation only, so flows stay flows.  (Conjugating
  each arc naively by its own left/right faces breaks conservation at any
  vertex of degree 3 or more.)
"""

from __future__ import annotations

from .errors import InvalidSolutionError, ValidationError
from .instances import Instance, Solution, verify_solution
from .plane import dart_reverse

Word = tuple[int, ...]

EMPTY: Word = ()


def reduce_word(letters) -> Word:
    """Fully reduced form: repeatedly drop adjacent x, -x pairs."""
    out: list[int] = []
    for x in letters:
        x = int(x)
        if x == 0:
            raise ValidationError("0 is not a letter")
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def concat(*words: Word) -> Word:
    out: list[int] = []
    for w in words:
        for x in w:
            if out and out[-1] == -x:
                out.pop()
            else:
                out.append(x)
    return tuple(out)


def invert(word: Word) -> Word:
    return tuple(-x for x in reversed(word))


def cyclic_reduce(word: Word) -> Word:
    """Strip cancelling first/last pairs; the conjugacy normal form."""
    w = reduce_word(word)
    lo, hi = 0, len(w)
    while hi - lo >= 2 and w[lo] == -w[hi - 1]:
        lo += 1
        hi -= 1
    return w[lo:hi]


# ---------------------------------------------------------------------------
# Flows
# ---------------------------------------------------------------------------


class Flow:
    """Sparse assignment of reduced words to arcs; missing arcs are empty."""

    __slots__ = ("words",)

    def __init__(self, words=None):
        cleaned: dict[int, Word] = {}
        for arc, w in (words or {}).items():
            rw = reduce_word(w)
            if rw:
                cleaned[int(arc)] = rw
        self.words: dict[int, Word] = dict(sorted(cleaned.items()))

    def word(self, arc: int) -> Word:
        return self.words.get(arc, EMPTY)

    def items(self):
        return self.words.items()

    def __eq__(self, other):
        if not isinstance(other, Flow):
            return NotImplemented
        return self.words == other.words

    def __hash__(self):
        return hash(tuple(self.words.items()))

    def __repr__(self):
        return f"Flow({len(self.words)} nonempty arcs)"


FaceLabeling = dict[int, Word]


def normalize_labeling(h: FaceLabeling) -> FaceLabeling:
    out = {}
    for f, w in h.items():
        rw = reduce_word(w)
        if rw:
            out[int(f)] = rw
    return dict(sorted(out.items()))


# ---------------------------------------------------------------------------
# Traces and flow validity
# ---------------------------------------------------------------------------


def vertex_trace(instance: Instance, flow: Flow, v: int) -> Word:
    """Clockwise concatenation around v, ingoing arcs reversed and negated."""
    g = instance.graph
    out: list[int] = []

    def push(w):
        for x in w:
            if out and out[-1] == -x:
                out.pop()
            else:
                out.append(x)

    for d in g.rotation[v]:
        push(invert(flow.word(dart_reverse(d))))  # ingoing arc of this edge
        push(flow.word(d))                        # outgoing arc
    return tuple(out)


def is_flow(instance: Instance, flow: Flow) -> bool:
    """Algebraic conservation at every vertex.

    Non-terminals must trace to the empty word.  A source of request i traces
    to the single letter i and its sink to the inverse letter -i (the sink
    sees its path arc ingoing), both up to cyclic reduction since the trace
    start point is arbitrary.
    """
    k = instance.k
    for w in flow.words.values():
        if any(abs(x) > k for x in w):
            return False
    role = {}
    for i, (s, t) in enumerate(instance.pairs(), start=1):
        role[s] = i
        role[t] = -i
    for v in instance.graph.vertices:
        trace = vertex_trace(instance, flow, v)
        want = role.get(v)
        if want is None:
            if trace:
                return False
        elif cyclic_reduce(trace) != (want,):
            return False
    return True


def flow_from_solution(instance: Instance, solution: Solution) -> Flow:
    """Assign letter i to the travel-direction arcs of path i."""
    if not verify_solution(instance, solution):
        raise InvalidSolutionError("solution fails verification")
    g = instance.graph
    arc_for = {}
    for e, (u, v) in g.edges.items():
        arc_for.setdefault((u, v), 2 * e)
        arc_for.setdefault((v, u), 2 * e + 1)
    words = {}
    for i, path in enumerate(solution.paths, start=1):
        for a, b in zip(path, path[1:]):
            words[arc_for[(a, b)]] = (i,)
    return Flow(words)


# ---------------------------------------------------------------------------
# Homology
# ---------------------------------------------------------------------------


def _face_label(h: FaceLabeling, f: int) -> Word:
    return reduce_word(h.get(f, EMPTY))


def apply_face_labeling(instance: Instance, flow: Flow, h: FaceLabeling) -> Flow:
    """Conjugate every arc's word by the face labels flanking it.

    With A the face left of the canonical arc 2e and B its right face, the
    canonical arc maps to h(A)^-1 . w . h(B) and the opposite arc to
    h(A)^-1 . w . h(A); see the module docstring for why both arcs share the
    left conjugator.  Requires h(outer) to be empty.
    """
    g = instance.graph
    if _face_label(h, g.outer_face):
        raise ValidationError("face labeling must be empty on the outer face")
    words = {}
    for e in g.edges:
        a = _face_label(h, g.face_of(2 * e))
        b = _face_label(h, g.face_of(2 * e + 1))
        w0 = flow.word(2 * e)
        w1 = flow.word(2 * e + 1)
        nw0 = concat(invert(a), w0, b)
        if nw0:
            words[2 * e] = nw0
        nw1 = concat(invert(a), w1, a)
        if nw1:
            words[2 * e + 1] = nw1
    return Flow(words)


def are_homologous(instance: Instance, flow_a: Flow, flow_b: Flow) -> FaceLabeling | None:
    """Unique face labeling carrying flow_a to flow_b, or None.

    Labels propagate from the outer face over a spanning structure of the
    dual (each primal edge links the faces on its two sides); every remaining
    arc equation is then verified.  On a connected graph the witness is
    unique because the propagation is forced.
    """
    g = instance.graph
    if not g.is_connected():
        raise ValidationError("homology testing requires a connected graph")
    labels: dict[int, Word] = {g.outer_face: EMPTY}
    queue = [g.outer_face]
    by_face: dict[int, list[int]] = {f.id: [] for f in g.faces()}
    for e in g.edges:
        by_face[g.face_of(2 * e)].append(e)
        by_face[g.face_of(2 * e + 1)].append(e)

    while queue:
        f = queue.pop()
        for e in by_face[f]:
            fa = g.face_of(2 * e)
            fb = g.face_of(2 * e + 1)
            w0 = flow_a.word(2 * e)
            psi0 = flow_b.word(2 * e)
            if fa in labels and fb not in labels:
                # psi0 = h(A)^-1 w0 h(B)  =>  h(B) = w0^-1 h(A) psi0
                labels[fb] = concat(invert(w0), labels[fa], psi0)
                queue.append(fb)
            elif fb in labels and fa not in labels:
                labels[fa] = concat(w0, labels[fb], invert(psi0))
                queue.append(fa)

    if len(labels) != len(g.faces()):
        return None  # dual disconnected; cannot happen for connected graphs

    for e in g.edges:
        a = labels[g.face_of(2 * e)]
        b = labels[g.face_of(2 * e + 1)]
        if flow_b.word(2 * e) != concat(invert(a), flow_a.word(2 * e), b):
            return None
        if flow_b.word(2 * e + 1) != concat(invert(a), flow_a.word(2 * e + 1), a):
            return None
    return normalize_labeling(labels)


# ---------------------------------------------------------------------------
# Text format: ``arcflow <edge-id> <+|-> <letters...>``
# ---------------------------------------------------------------------------


def parse_flow(text: str) -> Flow:
    from .instances import _content_lines
    from .errors import ParseError

    words = {}
    for lineno, tok in _content_lines(text):
        if tok[0] != "arcflow" or len(tok) < 3 or tok[2] not in ("+", "-"):
            raise ParseError(f"line {lineno}: expected 'arcflow <edge> <+|-> letters...'")
        try:
            e = int(tok[1])
            letters = [int(x) for x in tok[3:]]
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
        arc = 2 * e + (0 if tok[2] == "+" else 1)
        if arc in words:
            raise ParseError(f"line {lineno}: duplicate arc")
        words[arc] = letters
    return Flow(words)


def serialize_flow(flow: Flow) -> str:
    lines = []
    for arc, w in flow.items():
        sign = "+" if arc % 2 == 0 else "-"
        lines.append("arcflow {} {} {}".format(arc // 2, sign, " ".join(map(str, w))))
    return "\n".join(lines) + ("\n" if lines else "")
