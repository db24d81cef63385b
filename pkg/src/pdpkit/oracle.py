"""Exhaustive reference solver: ground truth for every equivalence test.

Backtracks over requests in index order, extending paths one vertex at a
time, neighbours ordered by smallest connecting edge id.  Pruning only ever
cuts branches that provably contain no solution (reachability of the current
target and of all future pairs around the used vertices), so the search stays
exact.  The first solution found in this canonical order is returned.
"""

from __future__ import annotations

from .errors import BudgetExceededError
from .instances import Instance, Solution, verify_solution


class _Budget:
    __slots__ = ("left",)

    def __init__(self, limit):
        self.left = limit

    def spend(self):
        if self.left is None:
            return
        self.left -= 1
        if self.left < 0:
            raise BudgetExceededError("oracle node budget exhausted")


def _search(instance: Instance, budget: _Budget):
    """Yields solutions in canonical order; caller stops after the first or drains."""
    g = instance.graph
    nbrs = {v: g.neighbors(v) for v in g.vertices}
    pairs = instance.pairs()
    k = len(pairs)
    used = set()

    def reachable(src, dst, blocked):
        if src == dst:
            return True
        seen = {src}
        stack = [src]
        while stack:
            x = stack.pop()
            for w in nbrs[x]:
                if w == dst:
                    return True
                if w not in seen and w not in blocked:
                    seen.add(w)
                    stack.append(w)
        return False

    def future_ok(next_req):
        for j in range(next_req, k):
            s, t = pairs[j]
            if not reachable(s, t, used):
                return False
        return True

    paths: list[list[int]] = []

    def extend(i, path):
        budget.spend()
        target = pairs[i][1]
        head = path[-1]
        if head == target:
            paths.append(list(path))
            if future_ok(i + 1):
                yield from place(i + 1)
            paths.pop()
            return
        for w in nbrs[head]:
            if w in used:
                continue
            # terminals of other requests can never lie on path i
            if w != target and w in terminal_set:
                continue
            used.add(w)
            path.append(w)
            if reachable(w, target, used - {w}):
                yield from extend(i, path)
            path.pop()
            used.discard(w)

    def place(i):
        if i == k:
            yield Solution(paths=tuple(tuple(p) for p in paths))
            return
        s = pairs[i][0]
        used.add(s)
        yield from extend(i, [s])
        used.discard(s)

    terminal_set = set(instance.sources) | set(instance.targets)
    yield from place(0)


def solve_bruteforce(instance: Instance, node_budget: int | None = None) -> Solution | None:
    """First solution in canonical order, or None when provably none exists."""
    budget = _Budget(node_budget)
    for sol in _search(instance, budget):
        assert verify_solution(instance, sol)
        return sol
    return None


def count_solutions(instance: Instance, node_budget: int | None = None) -> int:
    """Exact number of distinct solutions (tuples of per-request paths)."""
    budget = _Budget(node_budget)
    n = 0
    for _ in _search(instance, budget):
        n += 1
    return n
