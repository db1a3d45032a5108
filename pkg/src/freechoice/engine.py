"""Choice functions for families of finite sets, extracted from a free basis.

Input blocks are closed under non-empty subsets, every pair of distinct
symbols sharing a block contributes a difference generator, and the folded
graph of the generated subgroup yields a free basis.  Choices are then
filled in bottom-up by block size: singletons are forced, pairs are decided
by the mirror structure of their two basis words, and larger blocks follow
a case split on the successor map induced by the lower levels.  Every
identity the construction relies on is asserted at runtime and raises
InternalProofViolation when violated; such a failure is always a bug, never
bad input.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from . import stallings
from .errors import (
    BlockTooLargeError,
    EmptyBlockError,
    InternalProofViolation,
    InvalidSymbolError,
    MissingSubsetChoiceError,
    NotBijectionError,
    OverlappingBlocksError,
)
from .rng import XorShift64Star
from .stallings import Basis
from .words import IDENTITY, TaggedLetter, Word, block_id, cancellation_count, sigma, single

DEFAULT_MAX_BLOCK = 8

CASE_SINGLETON = "singleton"
CASE_PAIR_ODD = "pair-odd"
CASE_PAIR_EVEN = "pair-even"
CASE_NOT_BIJECTION = "not-bijection"
CASE_MULTI_ORBIT = "multi-orbit"
CASE_EVEN_SQUARE = "even-square-orbits"
CASE_ODD_MINLEN = "odd-minlen"
CASE_ODD_MINCANCEL = "odd-mincancel"
CASE_ODD_CORE = "odd-core"

ALL_CASES = (
    CASE_SINGLETON,
    CASE_PAIR_ODD,
    CASE_PAIR_EVEN,
    CASE_NOT_BIJECTION,
    CASE_MULTI_ORBIT,
    CASE_EVEN_SQUARE,
    CASE_ODD_MINLEN,
    CASE_ODD_MINCANCEL,
    CASE_ODD_CORE,
)


def _check(condition: bool, message: str) -> None:
    if not condition:
        raise InternalProofViolation(message)


@dataclass(frozen=True)
class Family:
    """The closed family: input blocks, all their non-empty subsets in
    canonical order (size ascending, then lexicographic), and the tagged
    alphabet."""

    z_blocks: Tuple[Tuple[str, ...], ...]
    y_blocks: Tuple[Tuple[str, ...], ...]

    @property
    def z_ids(self) -> Tuple[str, ...]:
        return tuple(block_id(b) for b in self.z_blocks)

    @property
    def y_ids(self) -> Tuple[str, ...]:
        return tuple(block_id(b) for b in self.y_blocks)

    def letters(self) -> Tuple[TaggedLetter, ...]:
        return tuple(
            TaggedLetter(x, block_id(y)) for y in self.y_blocks for x in y
        )


def block_elements(y_id: str) -> Tuple[str, ...]:
    return tuple(y_id.split(","))


def _block_key(elements: Sequence[str]) -> tuple:
    return (len(elements), tuple(elements))


def _validate_symbols(blocks: Iterable[Iterable[str]]) -> List[Tuple[str, ...]]:
    out = []
    seen = set()
    for raw in blocks:
        elements = sorted(set(raw))
        if not elements:
            raise EmptyBlockError("blocks must be non-empty")
        for x in elements:
            if not isinstance(x, str) or not x or "," in x:
                raise InvalidSymbolError(f"bad symbol {x!r}")
            if x in seen:
                raise OverlappingBlocksError(f"symbol {x!r} appears in two blocks")
            seen.add(x)
        out.append(tuple(elements))
    return out


def close_under_subsets(zs: Iterable[Iterable[str]], max_block_size: Optional[int] = None) -> Family:
    """All non-empty subsets of the input blocks, canonically ordered."""
    z_blocks = _validate_symbols(zs)
    if max_block_size is not None:
        for b in z_blocks:
            if len(b) > max_block_size:
                raise BlockTooLargeError(
                    f"block of size {len(b)} exceeds the cap {max_block_size}"
                )
    subsets = set()
    for b in z_blocks:
        for size in range(1, len(b) + 1):
            subsets.update(itertools.combinations(b, size))
    y_blocks = tuple(sorted(subsets, key=_block_key))
    return Family(tuple(sorted(z_blocks, key=_block_key)), y_blocks)


def pair_family(pairs: Iterable[Iterable[str]]) -> Family:
    """A family of 2-element blocks taken as-is, without subset closure."""
    blocks = _validate_symbols(pairs)
    for b in blocks:
        if len(b) != 2:
            raise EmptyBlockError(f"pair family needs 2-element blocks, got {b}")
    blocks = tuple(sorted(blocks, key=_block_key))
    return Family(blocks, blocks)


def k_generators(fam: Family) -> List[Word]:
    """One difference word per ordered pair of distinct symbols sharing a
    block, in canonical order."""
    gens = []
    for y in fam.y_blocks:
        y_id = block_id(y)
        for w, x in itertools.permutations(y, 2):
            gens.append(Word([(TaggedLetter(w, y_id), 1), (TaggedLetter(x, y_id), -1)]))
    return gens


def pair_word(w: str, x: str, y_id: str) -> Word:
    return Word([(TaggedLetter(w, y_id), 1), (TaggedLetter(x, y_id), -1)])


def build_basis(fam: Family, seed: int = 0, perturb_steps: int = 0) -> Basis:
    """Folded graph and basis of the difference subgroup, optionally
    Nielsen-perturbed."""
    graph = stallings.build_subgroup_graph(k_generators(fam))
    basis = stallings.extract_basis(graph, stallings.spanning_tree(graph))
    return stallings.nielsen_perturb(basis, seed, perturb_steps)


@dataclass(frozen=True)
class Trace:
    """Audit record of how one block was decided; data keys are fixed per
    case tag."""

    case_tag: str
    data: dict


@dataclass
class ChoiceTable:
    choices: Dict[str, str] = field(default_factory=dict)
    traces: Dict[str, Trace] = field(default_factory=dict)


def _first_block_letter(alpha: Word, y_id: str) -> str:
    for letter, _sign in alpha.letters:
        if letter.block == y_id:
            return letter.element
    raise InternalProofViolation(f"no letter tagged {y_id} in {alpha!r}")


def choose_pair(y_id: str, basis: Basis) -> Tuple[str, Trace]:
    """Decide a 2-element block from its two mutually inverse basis words."""
    x0, x1 = block_elements(y_id)
    u0 = pair_word(x0, x1, y_id)
    u1 = pair_word(x1, x0, y_id)
    w0 = stallings.rewrite(basis, u0)
    w1 = stallings.rewrite(basis, u1)
    l = len(w0)
    _check(l >= 1, "distinct symbols must give a non-identity difference")
    _check(len(w1) == l, "the two pair words must have equal basis length")
    _check(w1 == ~w0, "the two pair words must be mutual inverses")
    if l % 2 == 1:
        mid = l // 2
        sign0 = w0.letters[mid][1]
        sign1 = w1.letters[mid][1]
        _check(sign0 == -sign1, "exactly one middle letter is positive")
        chosen = x0 if sign0 > 0 else x1
        trace = Trace(CASE_PAIR_ODD, {"pair": [x0, x1], "l": l, "b_words": [w0, w1]})
        return chosen, trace
    m = l // 2
    f0 = Word(w0.letters[:m])
    f1 = Word(w1.letters[:m])
    big0 = stallings.expand(basis, f0)
    big1 = stallings.expand(basis, f1)
    _check(big0 * ~big1 == u0, "half-word identity failed for the first pair word")
    _check(big1 * ~big0 == u1, "half-word identity failed for the second pair word")
    g0 = ~big0 * single(TaggedLetter(x0, y_id))
    g1 = ~big1 * single(TaggedLetter(x1, y_id))
    _check(g0 == g1, "half-word correction must not depend on the start symbol")
    alpha = g0
    _check(sigma(y_id, alpha) == 1, "signed block count of the correction must be 1")
    chosen = _first_block_letter(alpha, y_id)
    trace = Trace(
        CASE_PAIR_EVEN,
        {"pair": [x0, x1], "l": l, "m": m, "b_words": [w0, w1], "alpha": alpha},
    )
    return chosen, trace


def successor_map(y_id: str, prev: ChoiceTable) -> Dict[str, str]:
    """x -> choice of the block minus x; total and fixed-point free."""
    elements = block_elements(y_id)
    s = {}
    for x in elements:
        sub_id = block_id(set(elements) - {x})
        if sub_id not in prev.choices:
            raise MissingSubsetChoiceError(f"no choice recorded for {sub_id!r}")
        s[x] = prev.choices[sub_id]
        _check(s[x] != x and s[x] in elements, "successor must land in the block minus x")
    return s


def orbits(s: Dict[str, str]) -> List[Tuple[str, ...]]:
    """Cycle decomposition of a bijection, canonically ordered.

    Each cycle starts at its smallest element and follows s; cycles are
    listed by (size, elements) of their underlying sets.
    """
    if len(set(s.values())) != len(s):
        raise NotBijectionError("successor map is not injective")
    visited = set()
    cycles = []
    for x in sorted(s):
        if x in visited:
            continue
        cycle = [x]
        visited.add(x)
        cur = s[x]
        while cur != x:
            cycle.append(cur)
            visited.add(cur)
            cur = s[cur]
        start = cycle.index(min(cycle))
        cycles.append(tuple(cycle[start:] + cycle[:start]))
    cycles.sort(key=lambda c: _block_key(sorted(c)))
    return cycles


def _prev_choice(prev: ChoiceTable, elements: Iterable[str]) -> str:
    sub_id = block_id(elements)
    if sub_id not in prev.choices:
        raise MissingSubsetChoiceError(f"no choice recorded for {sub_id!r}")
    return prev.choices[sub_id]


def choose_general(
    y_id: str, prev: ChoiceTable, basis: Basis, start: Optional[str] = None
) -> Tuple[str, Trace]:
    """Decide a block of size >= 3 from the successor map of the level below.

    The case split: successor not bijective; bijective with two or more
    orbits; a single orbit of even size (square it); a single orbit of odd
    size, which after two minimality reductions reaches the half-word core.
    `start` overrides the cycle's start symbol; the outcome must not depend
    on it.
    """
    elements = block_elements(y_id)
    n = len(elements)
    s = successor_map(y_id, prev)
    image = sorted(set(s.values()))
    if len(image) < n:
        chosen = _prev_choice(prev, image)
        trace = Trace(
            CASE_NOT_BIJECTION,
            {"successor": s, "image": image, "recurse": block_id(image)},
        )
        return chosen, trace

    orbs = orbits(s)
    if len(orbs) >= 2:
        reps = sorted({_prev_choice(prev, orb) for orb in orbs})
        chosen = _prev_choice(prev, reps)
        trace = Trace(
            CASE_MULTI_ORBIT,
            {
                "successor": s,
                "orbits": [list(o) for o in orbs],
                "representatives": reps,
                "recurse": block_id(reps),
            },
        )
        return chosen, trace

    if n % 2 == 0:
        s2 = {x: s[s[x]] for x in elements}
        orbs2 = orbits(s2)
        _check(len(orbs2) == 2, "square of a single even cycle must have two orbits")
        reps = sorted({_prev_choice(prev, orb) for orb in orbs2})
        chosen = _prev_choice(prev, reps)
        trace = Trace(
            CASE_EVEN_SQUARE,
            {
                "successor": s,
                "square_orbits": [list(o) for o in orbs2],
                "representatives": reps,
                "recurse": block_id(reps),
            },
        )
        return chosen, trace

    # single orbit, odd size
    x0 = min(elements) if start is None else start
    if x0 not in s:
        raise ValueError(f"start {x0!r} is not in block {y_id!r}")
    cycle = [x0]
    while len(cycle) < n:
        cycle.append(s[cycle[-1]])
    _check(s[cycle[-1]] == x0 and len(set(cycle)) == n, "cycle must traverse the block")
    diffs = [pair_word(cycle[i], cycle[(i + 1) % n], y_id) for i in range(n)]
    bwords = [stallings.rewrite(basis, u) for u in diffs]
    lengths = [len(w) for w in bwords]

    if len(set(lengths)) > 1:
        lmin = min(lengths)
        argmin = sorted(cycle[i] for i in range(n) if lengths[i] == lmin)
        chosen = _prev_choice(prev, argmin)
        trace = Trace(
            CASE_ODD_MINLEN,
            {
                "successor": s,
                "cycle": cycle,
                "lengths": lengths,
                "argmin": argmin,
                "recurse": block_id(argmin),
            },
        )
        return chosen, trace

    l = lengths[0]
    cancels = [cancellation_count(bwords[i], bwords[(i + 1) % n]) for i in range(n)]
    if len(set(cancels)) > 1:
        kmin = min(cancels)
        argmin = sorted(cycle[i] for i in range(n) if cancels[i] == kmin)
        chosen = _prev_choice(prev, argmin)
        trace = Trace(
            CASE_ODD_MINCANCEL,
            {
                "successor": s,
                "cycle": cycle,
                "lengths": lengths,
                "cancellations": cancels,
                "argmin": argmin,
                "recurse": block_id(argmin),
            },
        )
        return chosen, trace

    k = cancels[0]
    product = IDENTITY
    for w in bwords:
        product = product * w
    _check(product.is_identity(), "cyclic product of successor differences must vanish")
    _check((n * l) % 2 == 0, "total basis-letter count around the cycle must be even")
    _check(l % 2 == 0, "a common odd length is impossible around an odd cycle")
    m = l // 2
    _check(k >= m, "cancellation must reach the half-word boundary")
    halves = [Word(w.letters[:m]) for w in bwords]
    bigs = [stallings.expand(basis, h) for h in halves]
    for i in range(n):
        _check(
            bigs[i] * ~bigs[(i + 1) % n] == diffs[i],
            "half-word identity failed around the cycle",
        )
    alphas = [~bigs[i] * single(TaggedLetter(cycle[i], y_id)) for i in range(n)]
    _check(len(set(alphas)) == 1, "half-word correction must be constant on the block")
    alpha = alphas[0]
    _check(sigma(y_id, alpha) == 1, "signed block count of the correction must be 1")
    chosen = _first_block_letter(alpha, y_id)
    trace = Trace(
        CASE_ODD_CORE,
        {
            "successor": s,
            "cycle": cycle,
            "l": l,
            "k": k,
            "m": m,
            "b_words": bwords,
            "alpha": alpha,
        },
    )
    return chosen, trace


def fill_table(fam: Family, basis: Basis) -> ChoiceTable:
    """Bottom-up pass over the family in canonical (size, lexicographic)
    order; lower levels are frozen before a level starts."""
    table = ChoiceTable()
    for y in fam.y_blocks:
        y_id = block_id(y)
        if len(y) == 1:
            chosen, trace = y[0], Trace(CASE_SINGLETON, {"element": y[0]})
        elif len(y) == 2:
            chosen, trace = choose_pair(y_id, basis)
        else:
            chosen, trace = choose_general(y_id, table, basis)
        _check(chosen in y, "chosen element must belong to its block")
        table.choices[y_id] = chosen
        table.traces[y_id] = trace
    return table


def solve(
    zs: Iterable[Iterable[str]],
    seed: int = 0,
    perturb_steps: int = 0,
    max_block_size: Optional[int] = DEFAULT_MAX_BLOCK,
) -> ChoiceTable:
    """Choice table for all non-empty subsets of the input blocks."""
    fam = close_under_subsets(zs, max_block_size=max_block_size)
    basis = build_basis(fam, seed, perturb_steps)
    return fill_table(fam, basis)


def solve_pairs(pairs: Iterable[Iterable[str]]) -> ChoiceTable:
    """Standalone mode for a family of 2-element blocks: its own difference
    subgroup, no subset closure."""
    fam = pair_family(pairs)
    basis = build_basis(fam)
    table = ChoiceTable()
    for y in fam.y_blocks:
        y_id = block_id(y)
        chosen, trace = choose_pair(y_id, basis)
        _check(chosen in y, "chosen element must belong to its block")
        table.choices[y_id] = chosen
        table.traces[y_id] = trace
    return table


@dataclass
class VerificationReport:
    checks: int = 0
    failures: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def note(self, ok: bool, message: str) -> None:
        self.checks += 1
        if not ok:
            self.failures.append(message)


def random_k_product(gens: Sequence[Word], rng: XorShift64Star, max_factors: int = 50) -> Word:
    if not gens:
        return IDENTITY
    w = IDENTITY
    for _ in range(rng.randint(1, max_factors)):
        g = rng.choice(gens)
        w = w * (g if rng.randrange(2) == 0 else ~g)
    return w


def block_counts(w: Word) -> Dict[str, int]:
    """Signed letter count per block tag, one pass over the word."""
    tally: Dict[str, int] = {}
    for letter, sign in w.letters:
        tally[letter.block] = tally.get(letter.block, 0) + sign
    return tally


def verify(
    table: ChoiceTable,
    fam: Family,
    basis: Optional[Basis] = None,
    products: int = 1000,
    sample_seed: int = 1,
    max_factors: int = 50,
) -> VerificationReport:
    """Re-check a finished table: membership on every block, nesting
    consistency against the traces (full case recomputation when the basis
    is supplied), and the vanishing signed block counts on random subgroup
    products."""
    report = VerificationReport()
    for y in fam.y_blocks:
        y_id = block_id(y)
        chosen = table.choices.get(y_id)
        report.note(chosen is not None, f"missing choice for {y_id!r}")
        if chosen is None:
            continue
        report.note(chosen in y, f"choice {chosen!r} is outside block {y_id!r}")
        if len(y) == 1:
            report.note(chosen == y[0], f"singleton {y_id!r} must choose {y[0]!r}")

    for y in fam.y_blocks:
        y_id = block_id(y)
        trace = table.traces.get(y_id)
        if trace is None or len(y) < 3:
            continue
        try:
            s = successor_map(y_id, table)
        except (MissingSubsetChoiceError, InternalProofViolation) as exc:
            report.note(False, f"successor map of {y_id!r} is broken: {exc}")
            continue
        recorded = trace.data.get("successor")
        if recorded is not None:
            report.note(
                recorded == s,
                f"trace successor map of {y_id!r} disagrees with the table",
            )
        recurse = trace.data.get("recurse")
        if recurse is not None:
            report.note(
                table.choices.get(recurse) == table.choices.get(y_id),
                f"choice of {y_id!r} does not follow its recursion target {recurse!r}",
            )

    if basis is not None:
        prev = ChoiceTable(dict(table.choices), dict(table.traces))
        for y in fam.y_blocks:
            y_id = block_id(y)
            if len(y) == 1:
                continue
            try:
                if len(y) == 2:
                    chosen, _ = choose_pair(y_id, basis)
                else:
                    chosen, _ = choose_general(y_id, prev, basis)
            except (MissingSubsetChoiceError, InternalProofViolation) as exc:
                report.note(False, f"recomputation of {y_id!r} violated an identity: {exc}")
                continue
            report.note(
                chosen == table.choices.get(y_id),
                f"recomputed choice for {y_id!r} differs from the table",
            )

    if products > 0 and any(len(y) >= 2 for y in fam.y_blocks):
        gens = k_generators(fam)
        rng = XorShift64Star(sample_seed)
        for _ in range(products):
            w = random_k_product(gens, rng, max_factors)
            bad = {b: c for b, c in block_counts(w).items() if c != 0}
            report.note(
                not bad,
                f"nonzero signed block counts on a subgroup product: {bad}",
            )
    return report
