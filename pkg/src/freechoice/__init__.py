"""Choice functions for families of finite sets via free-group bases."""

from .engine import (
    ChoiceTable,
    Family,
    Trace,
    VerificationReport,
    build_basis,
    choose_general,
    choose_pair,
    close_under_subsets,
    k_generators,
    orbits,
    solve,
    solve_pairs,
    successor_map,
    verify,
)
from .errors import (
    BlockTooLargeError,
    EmptyBlockError,
    FamilyError,
    FreechoiceError,
    InternalProofViolation,
    InvalidSymbolError,
    MissingSubsetChoiceError,
    NotBijectionError,
    NotMemberError,
    OverlappingBlocksError,
)
from .stallings import (
    Basis,
    SubgroupGraph,
    apply_nielsen_moves,
    build_subgroup_graph,
    expand,
    extract_basis,
    fold,
    is_member,
    nielsen_perturb,
    rewrite,
    spanning_tree,
)
from .words import (
    IDENTITY,
    TaggedLetter,
    Word,
    block_id,
    cancellation_count,
    concat,
    format_word,
    inverse,
    reduce_word,
    sigma,
)

__version__ = "0.1.0"
