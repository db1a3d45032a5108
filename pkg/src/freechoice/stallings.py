"""Folded subgroup graphs and concrete free bases.

Given reduced generator words, this module builds the bouquet of their
loops at a base point, folds it into a deterministic edge-labelled graph,
and reads a free basis for the generated subgroup off a spanning tree: one
basis element per non-tree edge.  Reduced loops at the base point spell
exactly the subgroup elements, which gives membership testing and rewriting
between outer words and basis words.

All graphs handed out are in canonical form: vertices are numbered in BFS
discovery order from the base (vertex 0, expanding positive-direction edges
before negative, labels in their canonical order), edges are listed in
discovery order.  Two canonical graphs are therefore equal as values iff
they are isomorphic as based labelled graphs, and every downstream artifact
(spanning tree, basis, rewriting) is a pure function of the generator list.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

from .errors import InternalProofViolation, NotMemberError
from .rng import XorShift64Star
from .words import IDENTITY, TaggedLetter, Word, letter_key, single


@dataclass(frozen=True)
class Edge:
    source: int
    target: int
    label: TaggedLetter


class MultiGraph:
    """Mutable labelled multigraph used while building; fold() turns it into
    an immutable SubgroupGraph."""

    def __init__(self, num_vertices: int = 1, edges: Iterable[tuple] = (), base: int = 0):
        self.num_vertices = num_vertices
        self.edges = [tuple(e) for e in edges]  # (source, target, label)
        self.base = base

    def add_vertex(self) -> int:
        self.num_vertices += 1
        return self.num_vertices - 1

    def add_edge(self, source: int, target: int, label) -> None:
        self.edges.append((source, target, label))


def bouquet(generators: Sequence[Word]) -> MultiGraph:
    """One loop of fresh edges at the base per generator, spelling the word.

    Identity words are skipped; a negative letter becomes an edge traversed
    backwards, so the loop reads the word exactly.
    """
    g = MultiGraph()
    for w in generators:
        if w.is_identity():
            continue
        cur = g.base
        last = len(w) - 1
        for i, (letter, sign) in enumerate(w.letters):
            nxt = g.base if i == last else g.add_vertex()
            if sign > 0:
                g.add_edge(cur, nxt, letter)
            else:
                g.add_edge(nxt, cur, letter)
            cur = nxt
    return g


class SubgroupGraph:
    """Folded base-pointed graph in canonical form (see module docstring).

    Folded means deterministic in both directions: per vertex and label at
    most one outgoing and at most one incoming edge.
    """

    __slots__ = ("num_vertices", "edges", "_out", "_in", "_adj")
    base = 0

    def __init__(self, num_vertices: int, edges: Iterable[Edge]):
        self.num_vertices = num_vertices
        self.edges = tuple(edges)
        out: dict = {}
        inn: dict = {}
        for eid, e in enumerate(self.edges):
            if (e.source, e.label) in out or (e.target, e.label) in inn:
                raise ValueError("graph is not folded")
            out[(e.source, e.label)] = (eid, e.target)
            inn[(e.target, e.label)] = (eid, e.source)
        self._out = out
        self._in = inn
        adj: list = [[] for _ in range(num_vertices)]
        for eid, e in sorted(enumerate(self.edges), key=lambda t: letter_key(t[1].label)):
            adj[e.source].append((eid, e.target, 1))
        for eid, e in sorted(enumerate(self.edges), key=lambda t: letter_key(t[1].label)):
            adj[e.target].append((eid, e.source, -1))
        self._adj = tuple(tuple(a) for a in adj)

    def step(self, vertex: int, letter, sign: int):
        """Follow the edge labelled `letter` in the given direction, or None."""
        if sign > 0:
            return self._out.get((vertex, letter))
        return self._in.get((vertex, letter))

    def adjacency(self, vertex: int):
        """Incident edges in canonical order: outgoing by label, then incoming."""
        return self._adj[vertex]

    def rank(self) -> int:
        return len(self.edges) - self.num_vertices + 1

    def canonical_form(self) -> tuple:
        return (
            self.num_vertices,
            tuple((e.source, e.target, e.label) for e in self.edges),
        )

    def __eq__(self, other) -> bool:
        return isinstance(other, SubgroupGraph) and self.canonical_form() == other.canonical_form()

    def __hash__(self) -> int:
        return hash(self.canonical_form())

    def __repr__(self) -> str:
        return f"SubgroupGraph(vertices={self.num_vertices}, edges={len(self.edges)})"

    def to_dot(self) -> str:
        """Deterministic DOT rendering; the base vertex is drawn doubled."""
        lines = ["digraph subgroup_graph {", "  rankdir=LR;"]
        for v in range(self.num_vertices):
            shape = "doublecircle" if v == self.base else "circle"
            lines.append(f"  v{v} [shape={shape}];")
        for e in self.edges:
            lines.append(f'  v{e.source} -> v{e.target} [label="{e.label}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


class _FoldState:
    """Union-find over vertices plus per-root label buckets of edge ids."""

    def __init__(self, num_vertices: int, edges: Sequence[tuple], base: int):
        self.src = [e[0] for e in edges]
        self.dst = [e[1] for e in edges]
        self.lab = [e[2] for e in edges]
        self.parent = list(range(num_vertices))
        self.base = base
        self.live = set(range(len(edges)))
        # adj[root][(direction, label)] = set of edge ids; direction 0 = out, 1 = in
        self.adj: dict = defaultdict(dict)
        self.pending: deque = deque()
        for e in range(len(edges)):
            self._bucket_add(self.src[e], 0, self.lab[e], e)
            self._bucket_add(self.dst[e], 1, self.lab[e], e)

    def find(self, v: int) -> int:
        parent = self.parent
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    def _bucket_add(self, v: int, d: int, label, eid: int) -> None:
        b = self.adj[v].setdefault((d, label), set())
        b.add(eid)
        if len(b) >= 2:
            self.pending.append((v, d, label))

    def _remove_edge(self, eid: int) -> None:
        self.live.discard(eid)
        self.adj[self.find(self.src[eid])][(0, self.lab[eid])].discard(eid)
        self.adj[self.find(self.dst[eid])][(1, self.lab[eid])].discard(eid)

    def _merge(self, a: int, b: int) -> None:
        # keep the root with the larger bucket table to bound moving cost
        if len(self.adj.get(a, {})) < len(self.adj.get(b, {})):
            a, b = b, a
        self.parent[b] = a
        lost = self.adj.pop(b, {})
        kept = self.adj[a]
        for key, eids in lost.items():
            tgt = kept.setdefault(key, set())
            tgt |= eids
            if len(tgt) >= 2:
                self.pending.append((a, key[0], key[1]))

    def fold(self) -> None:
        """Merge label-clashing edge pairs until deterministic; each step
        deletes one edge, so this terminates in at most |E| merges."""
        while self.pending:
            v0, d, label = self.pending.popleft()
            v = self.find(v0)
            while True:
                eids = self.adj.get(v, {}).get((d, label))
                if not eids or len(eids) < 2:
                    break
                e1, e2 = sorted(eids)[:2]
                if d == 0:
                    a, b = self.find(self.dst[e1]), self.find(self.dst[e2])
                else:
                    a, b = self.find(self.src[e1]), self.find(self.src[e2])
                self._remove_edge(e2)
                if a != b:
                    self._merge(a, b)
                    v = self.find(v)

    def prune(self) -> None:
        """Drop dead branches: valence-1 vertices other than the base."""
        base_root = self.find(self.base)
        deg: dict = defaultdict(int)
        incident: dict = defaultdict(set)
        for e in self.live:
            s, t = self.find(self.src[e]), self.find(self.dst[e])
            deg[s] += 1
            deg[t] += 1
            incident[s].add(e)
            incident[t].add(e)
        queue = deque(v for v in sorted(incident) if v != base_root and deg[v] == 1)
        while queue:
            v = queue.popleft()
            if v == base_root or deg[v] != 1:
                continue
            (eid,) = [e for e in incident[v] if e in self.live]
            self.live.discard(eid)
            s, t = self.find(self.src[eid]), self.find(self.dst[eid])
            deg[s] -= 1
            deg[t] -= 1
            incident[s].discard(eid)
            incident[t].discard(eid)
            other = t if s == v else s
            if other != base_root and deg[other] == 1:
                queue.append(other)

    def canonical(self) -> SubgroupGraph:
        base_root = self.find(self.base)
        out_of: dict = defaultdict(list)
        into: dict = defaultdict(list)
        for e in self.live:
            out_of[self.find(self.src[e])].append(e)
            into[self.find(self.dst[e])].append(e)
        for lst in out_of.values():
            lst.sort(key=lambda e: letter_key(self.lab[e]))
        for lst in into.values():
            lst.sort(key=lambda e: letter_key(self.lab[e]))
        number = {base_root: 0}
        order = deque([base_root])
        edge_order: list = []
        seen = set()
        while order:
            v = order.popleft()
            for forward, edges in ((True, out_of.get(v, ())), (False, into.get(v, ()))):
                for e in edges:
                    if e not in seen:
                        seen.add(e)
                        edge_order.append(e)
                    w = self.find(self.dst[e] if forward else self.src[e])
                    if w not in number:
                        number[w] = len(number)
                        order.append(w)
        alive = set(out_of) | set(into) | {base_root}
        if len(number) != len(alive):
            raise ValueError("graph is not connected")
        edges = tuple(
            Edge(number[self.find(self.src[e])], number[self.find(self.dst[e])], self.lab[e])
            for e in edge_order
        )
        return SubgroupGraph(len(number), edges)


def fold(graph) -> SubgroupGraph:
    """Fold a graph to its deterministic form; a folded graph is a fixpoint.

    The loop language at the base point is unchanged.  Accepts a MultiGraph
    or an already-folded SubgroupGraph.
    """
    if isinstance(graph, SubgroupGraph):
        raw = [(e.source, e.target, e.label) for e in graph.edges]
        state = _FoldState(graph.num_vertices, raw, graph.base)
    else:
        state = _FoldState(graph.num_vertices, graph.edges, graph.base)
    state.fold()
    return state.canonical()


def build_subgroup_graph(generators: Sequence[Word]) -> SubgroupGraph:
    """Bouquet, fold, prune: the canonical graph of <generators>."""
    g = bouquet(generators)
    state = _FoldState(g.num_vertices, g.edges, g.base)
    state.fold()
    state.prune()
    return state.canonical()


def spanning_tree(graph: SubgroupGraph) -> frozenset:
    """BFS tree from the base; frontier expansion follows canonical
    adjacency order, so the tree is a pure function of the graph."""
    seen = {graph.base}
    tree = set()
    queue = deque([graph.base])
    while queue:
        v = queue.popleft()
        for eid, other, _sign in graph.adjacency(v):
            if other not in seen:
                seen.add(other)
                tree.add(eid)
                queue.append(other)
    if len(seen) != graph.num_vertices:
        raise ValueError("graph is not connected")
    return frozenset(tree)


@dataclass(frozen=True)
class Basis:
    """Free basis of the subgroup: one element per non-tree edge.

    `elements` are the basis words over the outer alphabet, indexed by the
    letters of basis words.  After a Nielsen perturbation, `substitution`
    maps each original basis letter to its expression over the current
    elements, so rewriting stays exact; None means the canonical basis.
    """

    graph: SubgroupGraph
    tree: frozenset
    elements: tuple
    edge_letters: dict = field(repr=False)
    substitution: Optional[tuple] = None

    def rank(self) -> int:
        return len(self.elements)


def extract_basis(graph: SubgroupGraph, tree: frozenset) -> Basis:
    """Basis word of a non-tree edge u -x-> v: treepath(base, u) . x .
    treepath(v, base), reduced; elements in canonical edge order."""
    path = {graph.base: IDENTITY}
    queue = deque([graph.base])
    while queue:
        v = queue.popleft()
        for eid, other, sign in graph.adjacency(v):
            if eid in tree and other not in path:
                path[other] = path[v] * single(graph.edges[eid].label, sign)
                queue.append(other)
    if len(path) != graph.num_vertices:
        raise ValueError("tree does not span the graph")
    elements = []
    edge_letters = {}
    for eid, e in enumerate(graph.edges):
        if eid in tree:
            continue
        w = path[e.source] * single(e.label) * ~path[e.target]
        if w.is_identity():
            raise InternalProofViolation("non-tree edge produced an identity basis element")
        edge_letters[eid] = len(elements)
        elements.append(w)
    return Basis(graph, frozenset(tree), tuple(elements), edge_letters)


def canonical_basis(generators: Sequence[Word]) -> Basis:
    graph = build_subgroup_graph(generators)
    return extract_basis(graph, spanning_tree(graph))


def rewrite(basis: Basis, word: Word) -> Word:
    """Express a subgroup element as a reduced basis word.

    Traces the word's path from the base: each non-tree edge crossed emits
    one signed basis letter.  Raises NotMemberError if some letter has no
    edge to follow or the path ends off base.
    """
    graph = basis.graph
    cur = graph.base
    out = []
    for letter, sign in word.letters:
        hit = graph.step(cur, letter, sign)
        if hit is None:
            raise NotMemberError(f"no edge for {letter}^{sign} at vertex {cur}")
        eid, cur = hit
        if eid not in basis.tree:
            out.append((basis.edge_letters[eid], sign))
    if cur != graph.base:
        raise NotMemberError("path ends off the base point")
    bword = Word(out)
    if bword.letters != tuple(out):
        # folding plus the tree structure make this impossible
        raise InternalProofViolation("rewrite emitted an unreduced basis word")
    if basis.substitution is not None:
        bword = _substitute(bword, basis.substitution)
    return bword


def expand(basis: Basis, bword: Word) -> Word:
    """Substitute each basis letter by its element word and reduce."""
    out = []
    for i, sign in bword.letters:
        element = basis.elements[i] if sign > 0 else ~basis.elements[i]
        out.extend(element.letters)
    return Word(out)


def is_member(basis: Basis, word: Word) -> bool:
    try:
        rewrite(basis, word)
    except NotMemberError:
        return False
    return True


def _substitute(bword: Word, table: Sequence[Word]) -> Word:
    out = []
    for i, sign in bword.letters:
        w = table[i] if sign > 0 else ~table[i]
        out.extend(w.letters)
    return Word(out)


def apply_nielsen_moves(basis: Basis, moves: Iterable[tuple]) -> Basis:
    """Apply elementary Nielsen transformations to the basis.

    Moves: ("swap", i, j), ("invert", i), ("mult", i, j, eps) meaning
    b_i <- reduce(b_i * b_j^eps) with i != j, eps in {1, -1}.  The generated
    subgroup is unchanged; the returned basis carries the substitution table
    that re-expresses original basis letters over the new elements.
    """
    elements = list(basis.elements)
    rank = len(elements)
    if basis.substitution is None:
        table = [single(i) for i in range(rank)]
    else:
        table = list(basis.substitution)
    for move in moves:
        kind = move[0]
        if kind == "swap":
            _, i, j = move
            _check_indices(rank, i, j)
            elements[i], elements[j] = elements[j], elements[i]
            table = [_swap_letters(w, i, j) for w in table]
        elif kind == "invert":
            _, i = move
            _check_indices(rank, i)
            elements[i] = ~elements[i]
            table = [_flip_letter(w, i) for w in table]
        elif kind == "mult":
            _, i, j, eps = move
            _check_indices(rank, i, j)
            if i == j:
                raise ValueError("mult move needs distinct indices")
            if eps not in (1, -1):
                raise ValueError("mult exponent must be +1 or -1")
            elements[i] = elements[i] * (elements[j] if eps > 0 else ~elements[j])
            if elements[i].is_identity():
                raise InternalProofViolation("Nielsen move collapsed a basis element")
            table = [_mult_letter(w, i, j, eps) for w in table]
        else:
            raise ValueError(f"unknown Nielsen move {move!r}")
    return replace(basis, elements=tuple(elements), substitution=tuple(table))


def _check_indices(rank: int, *indices: int) -> None:
    for i in indices:
        if not 0 <= i < rank:
            raise ValueError(f"basis index {i} out of range for rank {rank}")


def _swap_letters(w: Word, i: int, j: int) -> Word:
    table = {i: j, j: i}
    return Word((table.get(l, l), s) for l, s in w.letters)


def _flip_letter(w: Word, i: int) -> Word:
    return Word((l, -s if l == i else s) for l, s in w.letters)


def _mult_letter(w: Word, i: int, j: int, eps: int) -> Word:
    # the current letter i now denotes old_i * old_j^eps, hence
    # old_i = new_i * new_j^(-eps)
    out = []
    for l, s in w.letters:
        if l == i and s > 0:
            out.extend(((i, 1), (j, -eps)))
        elif l == i:
            out.extend(((j, eps), (i, -1)))
        else:
            out.append((l, s))
    return Word(out)


def nielsen_perturb(basis: Basis, seed: int, steps: int) -> Basis:
    """Seeded random sequence of elementary Nielsen moves.

    Seed 0 means no perturbation and returns the basis unchanged, as does a
    rank-0 basis or steps == 0.  Rank-1 bases only admit inversion.
    """
    rank = len(basis.elements)
    if seed == 0 or steps <= 0 or rank == 0:
        return basis
    rng = XorShift64Star(seed)
    moves = []
    for _ in range(steps):
        if rank == 1:
            moves.append(("invert", 0))
            continue
        kind = rng.randrange(3)
        i = rng.randrange(rank)
        if kind == 0:
            moves.append(("invert", i))
            continue
        j = rng.randrange(rank - 1)
        if j >= i:
            j += 1
        if kind == 1:
            moves.append(("swap", i, j))
        else:
            eps = 1 if rng.randrange(2) == 0 else -1
            moves.append(("mult", i, j, eps))
    return apply_nielsen_moves(basis, moves)
