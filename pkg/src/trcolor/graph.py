"""Regular graphs: representation, text I/O, generators and brute-force oracles.

Vertices are ``0..n-1``; edges are stored once as ``(min, max)`` pairs in
sorted order, so two graphs with the same edge set compare equal and
serialize identically.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .exceptions import CapExceededError, GraphFormatError, IrregularGraphError

UNASSIGNED = 0

COLORING_CAP = 20
INDEPENDENT_SET_CAP = 30


def make_rng(seed):
    """Counter-based generator: the same 64-bit seed gives the same stream everywhere."""
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


@dataclass(frozen=True)
class Graph:
    n: int
    edges: tuple
    adjacency: tuple = field(init=False, repr=False, compare=False)
    degree: int = field(init=False, compare=False)

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise GraphFormatError("graph needs at least one vertex")
        canon = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise GraphFormatError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphFormatError(f"edge ({u}, {v}) out of range for n={n}")
            e = (u, v) if u < v else (v, u)
            if e in canon:
                raise GraphFormatError(f"duplicate edge {e}")
            canon.add(e)
        edges = tuple(sorted(canon))
        nbrs = [[] for _ in range(n)]
        for u, v in edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        degs = [len(a) for a in nbrs]
        for w in range(1, n):
            if degs[w] != degs[0]:
                raise IrregularGraphError(degs[0], degs[w], 0, w)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "adjacency", tuple(tuple(sorted(a)) for a in nbrs))
        object.__setattr__(self, "degree", degs[0])

    @property
    def m(self):
        return len(self.edges)

    def adjacency_matrix(self, dtype=float):
        A = np.zeros((self.n, self.n), dtype=dtype)
        if self.edges:
            e = np.asarray(self.edges)
            A[e[:, 0], e[:, 1]] = 1
            A[e[:, 1], e[:, 0]] = 1
        return A

    def has_edge(self, u, v):
        return v in self.adjacency[u]

    def neighbor_masks(self):
        """Bitmask of neighbours per vertex (used by the exhaustive oracles)."""
        return [sum(1 << w for w in a) for a in self.adjacency]

    def __repr__(self):
        return f"Graph(n={self.n}, d={self.degree}, m={self.m})"


@dataclass(frozen=True)
class PartialColoring:
    """Colors ``1..q`` per vertex, ``0`` meaning unassigned."""

    assignment: tuple

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple(int(c) for c in self.assignment))
        if any(c < 0 for c in self.assignment):
            raise ValueError("colors must be non-negative (0 = unassigned)")

    @property
    def colored_count(self):
        return sum(1 for c in self.assignment if c != UNASSIGNED)

    @property
    def n(self):
        return len(self.assignment)

    def classes(self, q=3):
        return [sorted(u for u, c in enumerate(self.assignment) if c == k) for k in range(1, q + 1)]


@dataclass(frozen=True)
class ColoringVerdict:
    valid: bool
    colored_count: int
    violations: tuple

    def __bool__(self):
        return self.valid


# --------------------------------------------------------------------------- I/O


def loads(text: str) -> Graph:
    """Parse the ``n m`` edge-list format or DIMACS ``.col``."""
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise GraphFormatError("empty input")
    if any(ln.startswith(("p ", "p\t")) for ln in lines) or lines[0].startswith("c"):
        return _parse_dimacs(lines)
    return _parse_edge_list(lines)


def load_graph(source) -> Graph:
    """Read a graph from a path, a text stream, or raw bytes (use :func:`loads` for str)."""
    if isinstance(source, (bytes, bytearray)):
        text = source.decode("ascii")
    elif hasattr(source, "read"):
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("ascii")
    else:
        with open(source, encoding="ascii") as fh:
            text = fh.read()
    return loads(text)


def _ints(line, lineno, count):
    parts = line.split()
    if len(parts) != count:
        raise GraphFormatError(f"line {lineno}: expected {count} integers, got {line!r}")
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise GraphFormatError(f"line {lineno}: non-integer token in {line!r}") from None


def _parse_edge_list(lines):
    n, m = _ints(lines[0], 1, 2)
    body = lines[1:]
    if len(body) != m:
        raise GraphFormatError(f"header announces {m} edges, found {len(body)}")
    edges = [tuple(_ints(ln, i + 2, 2)) for i, ln in enumerate(body)]
    return Graph(n, tuple(edges))


def _parse_dimacs(lines):
    n = m = None
    edges = []
    for i, ln in enumerate(lines, 1):
        tag = ln.split(maxsplit=1)[0]
        if tag == "c":
            continue
        if tag == "p":
            parts = ln.split()
            if len(parts) != 4:
                raise GraphFormatError(f"line {i}: bad problem line {ln!r}")
            n, m = _ints(" ".join(parts[2:]), i, 2)
        elif tag == "e":
            if n is None:
                raise GraphFormatError(f"line {i}: edge before problem line")
            u, v = _ints(ln[1:], i, 2)
            if u < 1 or v < 1:
                raise GraphFormatError(f"line {i}: DIMACS vertices are 1-indexed")
            edges.append((u - 1, v - 1))
        else:
            raise GraphFormatError(f"line {i}: unknown record {tag!r}")
    if n is None:
        raise GraphFormatError("missing 'p edge n m' line")
    if m != len(edges):
        raise GraphFormatError(f"problem line announces {m} edges, found {len(edges)}")
    return Graph(n, tuple(edges))


def dumps(g: Graph) -> str:
    out = io.StringIO()
    out.write(f"{g.n} {g.m}\n")
    for u, v in g.edges:
        out.write(f"{u} {v}\n")
    return out.getvalue()


def write_graph(g: Graph, path):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(dumps(g))


# --------------------------------------------------------------------- generators


def complete_multipartite(parts: int, part_size: int) -> Graph:
    if parts < 2 or part_size < 1:
        raise ValueError("need parts >= 2 and part_size >= 1")
    label = np.repeat(np.arange(parts), part_size)
    n = parts * part_size
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if label[u] != label[v]]
    return Graph(n, tuple(edges))


def cycle(n: int) -> Graph:
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    return Graph(n, tuple((i, (i + 1) % n) for i in range(n)))


def petersen() -> Graph:
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return Graph(10, tuple(outer + spokes + inner))


def blow_up(g: Graph, t: int) -> Graph:
    """Replace every vertex by ``t`` copies and every edge by a complete bipartite graph."""
    if t < 1:
        raise ValueError("t must be >= 1")
    edges = [(u * t + a, v * t + b) for u, v in g.edges for a in range(t) for b in range(t)]
    return Graph(g.n * t, tuple(edges))


def disjoint_union(graphs: Sequence[Graph]) -> Graph:
    graphs = list(graphs)
    if not graphs:
        raise ValueError("need at least one graph")
    degs = {g.degree for g in graphs}
    if len(degs) > 1:
        a, b = sorted(degs)[:2]
        raise IrregularGraphError(a, b)
    edges, offset = [], 0
    for g in graphs:
        edges.extend((u + offset, v + offset) for u, v in g.edges)
        offset += g.n
    return Graph(offset, tuple(edges))


def _circulant(n, d):
    if d >= n or (n * d) % 2:
        raise ValueError(f"no {d}-regular graph on {n} vertices")
    edges = {tuple(sorted((i, (i + k) % n))) for i in range(n) for k in range(1, d // 2 + 1)}
    if d % 2:
        edges |= {(i, i + n // 2) for i in range(n // 2)}
    return edges


def _try_swap(edges, e1, e2, orientation, allowed=None):
    """Double-edge swap ``(a,b),(c,e) -> (a,c),(b,e)`` (or ``(a,e),(b,c)``).

    Returns the two new edges, or ``None`` if the swap would create a loop,
    a duplicate, or an edge rejected by ``allowed``.
    """
    a, b = e1
    c, e = e2 if orientation == 0 else e2[::-1]
    if len({a, b, c, e}) < 4:
        return None
    n1 = (min(a, c), max(a, c))
    n2 = (min(b, e), max(b, e))
    if n1 in edges or n2 in edges:
        return None
    if allowed is not None and not (allowed(n1) and allowed(n2)):
        return None
    return n1, n2


def random_regular(n: int, d: int, seed: int, swaps=None) -> Graph:
    """Random ``d``-regular graph: a circulant scrambled by degree-preserving swaps."""
    rng = make_rng(seed)
    edges = _circulant(n, d)
    target = swaps if swaps is not None else 10 * len(edges)
    done = attempts = 0
    while done < target and attempts < 50 * max(target, 1):
        attempts += 1
        ordered = sorted(edges)
        i, j = rng.integers(len(ordered), size=2)
        new = _try_swap(edges, ordered[i], ordered[j], int(rng.integers(2)))
        if new is None:
            continue
        edges.discard(ordered[i])
        edges.discard(ordered[j])
        edges.update(new)
        done += 1
    return Graph(n, tuple(edges))


def perturb_almost_colorable(g: Graph, delta: float, seed: int, coloring=None, max_retries=10_000):
    """Rewire edges around a random ``ceil(delta*n)`` subset, keeping every degree.

    Every swap removes two edges and adds two, and each added edge either
    touches the chosen subset or joins two differently-coloured vertices of
    a reference 3-colouring, so the remaining vertices stay properly
    coloured.  Returns ``(graph, subset, coloring)``.
    """
    if not 0 <= delta <= 1:
        raise ValueError("delta must lie in [0, 1]")
    k = math.ceil(delta * g.n - 1e-12)
    if k == 0:
        return g, (), coloring
    if coloring is None:
        coloring = find_proper_coloring(g, 3)
        if coloring is None:
            raise ValueError("input graph is not 3-colorable")
    rng = make_rng(seed)
    chosen = frozenset(int(x) for x in rng.choice(g.n, size=k, replace=False))
    col = coloring

    def allowed(e):
        u, v = e
        return u in chosen or v in chosen or col[u] != col[v]

    edges = set(g.edges)
    target = max(1, k * g.degree)
    done = tries = 0
    while done < target and tries < max_retries:
        tries += 1
        ordered = sorted(edges)
        touching = [e for e in ordered if e[0] in chosen or e[1] in chosen]
        if not touching:
            break
        e1 = touching[int(rng.integers(len(touching)))]
        if e1[0] not in chosen:
            e1 = e1[::-1]
        e2 = ordered[int(rng.integers(len(ordered)))]
        if e2 == (min(e1), max(e1)):
            continue
        new = _try_swap(edges, e1, e2, int(rng.integers(2)), allowed)
        if new is None:
            continue
        edges.discard((min(e1), max(e1)))
        edges.discard(e2)
        edges.update(new)
        done += 1
    if done == 0:
        raise RuntimeError(f"no degree-preserving swap found after {tries} attempts")
    return Graph(g.n, tuple(edges)), tuple(sorted(chosen)), coloring


# ----------------------------------------------------------------- verification


def verify_partial_coloring(g: Graph, c) -> ColoringVerdict:
    assignment = c.assignment if isinstance(c, PartialColoring) else tuple(int(x) for x in c)
    if len(assignment) != g.n:
        raise ValueError(f"coloring has {len(assignment)} entries, graph has {g.n} vertices")
    bad = tuple(
        (u, v) for u, v in g.edges if assignment[u] != UNASSIGNED and assignment[u] == assignment[v]
    )
    colored = sum(1 for a in assignment if a != UNASSIGNED)
    return ColoringVerdict(not bad, colored, bad)


def is_independent_set(g: Graph, vertices: Iterable[int]) -> bool:
    s = set(int(v) for v in vertices)
    return not any(u in s and v in s for u, v in g.edges)


def _check_disjoint(s, t):
    s, t = set(s), set(t)
    overlap = s & t
    if overlap:
        raise ValueError(f"vertex sets overlap on {sorted(overlap)}")
    return s, t


def edges_between(g: Graph, s, t) -> int:
    s, t = _check_disjoint(s, t)
    return sum(1 for u, v in g.edges if (u in s and v in t) or (u in t and v in s))


def edges_within(g: Graph, s) -> int:
    s = set(s)
    return sum(1 for u, v in g.edges if u in s and v in s)


# ------------------------------------------------------------- brute-force oracles


def _bfs_order(g):
    seen, order = set(), []
    for start in sorted(range(g.n), key=lambda v: (-g.degree, v)):
        if start in seen:
            continue
        queue = [start]
        seen.add(start)
        while queue:
            v = queue.pop(0)
            order.append(v)
            for w in g.adjacency[v]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
    return order


def enumerate_proper_colorings(g: Graph, colors: int = 3, allow_uncolored_budget: int = 0, cap=COLORING_CAP):
    """All assignments in ``{0 (uncolored), 1..q}^n`` with at most ``budget`` zeros
    and no monochromatic edge between coloured endpoints.

    Backtracking in BFS order; a branch is cut as soon as the number of
    vertices whose colours are all blocked, plus zeros already used, exceeds
    the budget.  Rows are returned in lexicographic order.
    """
    if cap is not None and g.n > cap:
        raise CapExceededError(f"n={g.n} exceeds coloring enumeration cap {cap}")
    if allow_uncolored_budget < 0:
        raise ValueError("budget must be >= 0")
    q, n, budget = colors, g.n, allow_uncolored_budget
    order = _bfs_order(g)
    adj = g.adjacency
    blocked = [[0] * (q + 1) for _ in range(n)]
    assign = [-1] * n
    out = []

    def n_dead():
        return sum(
            1 for w in range(n) if assign[w] < 0 and all(blocked[w][c] for c in range(1, q + 1))
        )

    def rec(i, used):
        if i == n:
            out.append(tuple(assign))
            return
        v = order[i]
        for c in range(1, q + 1):
            if blocked[v][c]:
                continue
            assign[v] = c
            for w in adj[v]:
                blocked[w][c] += 1
            if used + n_dead() <= budget:
                rec(i + 1, used)
            for w in adj[v]:
                blocked[w][c] -= 1
        if used < budget:
            assign[v] = UNASSIGNED
            if used + 1 + n_dead() <= budget:
                rec(i + 1, used + 1)
        assign[v] = -1

    if n_dead() <= budget:
        rec(0, 0)
    if not out:
        return np.zeros((0, n), dtype=np.int8)
    arr = np.asarray(out, dtype=np.int8)
    return arr[np.lexsort(arr.T[::-1])]


def find_proper_coloring(g: Graph, colors: int = 3):
    """One proper full colouring (DSATUR-ordered backtracking), or ``None``."""
    n, adj = g.n, g.adjacency
    assign = [0] * n

    def pick():
        best, key = None, None
        for v in range(n):
            if assign[v]:
                continue
            sat = len({assign[w] for w in adj[v] if assign[w]})
            k = (sat, len(adj[v]), -v)
            if key is None or k > key:
                best, key = v, k
        return best

    def rec(left):
        if left == 0:
            return True
        v = pick()
        used = {assign[w] for w in adj[v]}
        for c in range(1, colors + 1):
            if c in used:
                continue
            assign[v] = c
            if rec(left - 1):
                return True
            assign[v] = 0
        return False

    return tuple(assign) if rec(n) else None


def max_independent_set_bruteforce(g: Graph, cap=INDEPENDENT_SET_CAP):
    """A maximum independent set by branch and bound over bitmasks."""
    if cap is not None and g.n > cap:
        raise CapExceededError(f"n={g.n} exceeds independent-set cap {cap}")
    nb = g.neighbor_masks()
    order = sorted(range(g.n), key=lambda v: (-len(g.adjacency[v]), v))
    best = [0, 0]

    def rec(cand, cur, size):
        if cand == 0:
            if size > best[0]:
                best[0], best[1] = size, cur
            return
        if size + bin(cand).count("1") <= best[0]:
            return
        # cheapest branching vertex: highest degree inside the candidate set
        v = max((w for w in order if cand >> w & 1), key=lambda w: bin(nb[w] & cand).count("1"))
        if bin(nb[v] & cand).count("1") == 0:
            rec(cand & ~(1 << v), cur | 1 << v, size + 1)
            return
        rec(cand & ~(1 << v) & ~nb[v], cur | 1 << v, size + 1)
        rec(cand & ~(1 << v), cur, size)

    rec((1 << g.n) - 1, 0, 0)
    return tuple(v for v in range(g.n) if best[1] >> v & 1)


def enumerate_independent_sets(g: Graph, min_size: int, cap=INDEPENDENT_SET_CAP):
    """Indicator vectors of every independent set with at least ``min_size`` vertices."""
    if cap is not None and g.n > cap:
        raise CapExceededError(f"n={g.n} exceeds independent-set cap {cap}")
    n, nb = g.n, g.neighbor_masks()
    out = []

    def rec(v, forbidden, chosen, size):
        if size + (n - v) < min_size:
            return
        if v == n:
            out.append(chosen)
            return
        if not forbidden >> v & 1:
            rec(v + 1, forbidden | nb[v], chosen | 1 << v, size + 1)
        rec(v + 1, forbidden, chosen, size)

    rec(0, 0, 0, 0)
    arr = np.array([[m >> v & 1 for v in range(n)] for m in out], dtype=np.int8).reshape(-1, n)
    if len(arr):
        arr = arr[np.lexsort(arr.T[::-1])]
    return arr
