"""Command line driver: solve instances, verify results, dump traces,
export graphs, and run the randomized selfcheck.

Exit codes: 0 ok, 1 user or data error, 2 internal proof violation.  All
output files are deterministic: same instance and flags, same bytes.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from collections import Counter
from pathlib import Path

from . import engine, stallings
from .errors import FreechoiceError, InternalProofViolation
from .rng import XorShift64Star
from .words import Word, block_id, format_word

SYMBOL_RE = re.compile(r"^[A-Za-z0-9_]+$")


class UsageError(FreechoiceError):
    pass


def env_max_block() -> int:
    raw = os.environ.get("FREECHOICE_MAX_BLOCK")
    if raw is None:
        return engine.DEFAULT_MAX_BLOCK
    try:
        cap = int(raw)
    except ValueError:
        cap = 0
    if cap < 1:
        raise UsageError(f"FREECHOICE_MAX_BLOCK must be a positive integer, got {raw!r}")
    return cap


def load_json(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"{path}: top level must be a JSON object")
    return data


def load_instance(path: str) -> list:
    data = load_json(path)
    blocks = data.get("blocks")
    if not isinstance(blocks, list) or not blocks:
        raise UsageError(f"{path}: expected a non-empty \"blocks\" list")
    seen = set()
    for b in blocks:
        if not isinstance(b, list) or not b:
            raise UsageError(f"{path}: blocks must be non-empty lists of symbols")
        for x in b:
            if not isinstance(x, str) or not SYMBOL_RE.match(x):
                raise UsageError(f"{path}: bad symbol {x!r} (want [A-Za-z0-9_]+)")
            if x in seen:
                raise UsageError(f"{path}: symbol {x!r} appears twice")
            seen.add(x)
    return blocks


def dump_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def write_output(text: str, path) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _json_value(value):
    if isinstance(value, Word):
        return format_word(value)
    if isinstance(value, dict):
        return {k: _json_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    return value


def solve_instance(blocks, seed, perturb_steps, cap):
    fam = engine.close_under_subsets(blocks, max_block_size=cap)
    basis = engine.build_basis(fam, seed, perturb_steps)
    table = engine.fill_table(fam, basis)
    return fam, basis, table


def result_payload(fam, basis, table, seed, perturb_steps, all_subsets):
    records = []
    for z in fam.z_blocks:
        zid = block_id(z)
        records.append(
            {
                "block": list(z),
                "chosen": table.choices[zid],
                "case": table.traces[zid].case_tag,
            }
        )
    payload = {
        "choices": records,
        "meta": {
            "seed": seed,
            "perturb_steps": perturb_steps,
            "basis_rank": basis.rank(),
            "y_size": len(fam.y_blocks),
        },
    }
    if all_subsets:
        payload["table"] = dict(table.choices)
    return payload


def trace_payload(fam, table) -> dict:
    traces = {}
    for yid in fam.y_ids:
        tr = table.traces[yid]
        traces[yid] = {"case_tag": tr.case_tag, "data": _json_value(tr.data)}
    return {"traces": traces}


def cmd_solve(args) -> int:
    blocks = load_instance(args.input)
    fam, basis, table = solve_instance(blocks, args.seed, args.perturb_steps, env_max_block())
    payload = result_payload(fam, basis, table, args.seed, args.perturb_steps, args.all_subsets)
    write_output(dump_json(payload), args.output)
    if args.trace is not None:
        write_output(dump_json(trace_payload(fam, table)), args.trace)
    if args.emit_dot is not None:
        write_output(basis.graph.to_dot(), args.emit_dot)
    return 0


def cmd_trace(args) -> int:
    blocks = load_instance(args.input)
    fam, _basis, table = solve_instance(blocks, args.seed, args.perturb_steps, env_max_block())
    payload = trace_payload(fam, table)
    if args.block is not None:
        wanted = block_id(args.block.split(","))
        if wanted not in payload["traces"]:
            raise UsageError(f"block {args.block!r} is not a subset of the instance")
        payload = {"traces": {wanted: payload["traces"][wanted]}}
    write_output(dump_json(payload), args.output)
    return 0


def cmd_graph(args) -> int:
    blocks = load_instance(args.input)
    fam = engine.close_under_subsets(blocks, max_block_size=env_max_block())
    graph = stallings.build_subgroup_graph(engine.k_generators(fam))
    write_output(graph.to_dot(), args.output)
    return 0


def cmd_verify(args) -> int:
    blocks = load_instance(args.instance)
    result = load_json(args.result)
    fam = engine.close_under_subsets(blocks, max_block_size=env_max_block())
    failures = []

    records = result.get("choices")
    if not isinstance(records, list):
        raise UsageError(f"{args.result}: expected a \"choices\" list")
    seen_ids = []
    for rec in records:
        if not isinstance(rec, dict) or not isinstance(rec.get("block"), list):
            failures.append(f"malformed record: {rec!r}")
            continue
        rid = block_id(rec["block"])
        seen_ids.append(rid)
        if rec.get("chosen") not in rec["block"]:
            failures.append(f"block {rid!r}: chosen {rec.get('chosen')!r} is not a member")
        if rec.get("case") not in engine.ALL_CASES:
            failures.append(f"block {rid!r}: unknown case tag {rec.get('case')!r}")
    if sorted(seen_ids) != sorted(fam.z_ids):
        failures.append(
            f"records cover {sorted(seen_ids)}, instance has {sorted(fam.z_ids)}"
        )

    full = result.get("table")
    if full is not None:
        if not isinstance(full, dict):
            failures.append("\"table\" must be an object")
        else:
            table = engine.ChoiceTable(dict(full), {})
            report = engine.verify(table, fam, basis=None, products=0)
            failures.extend(report.failures)
            for rec, rid in zip(records, seen_ids):
                if rid in full and full[rid] != rec.get("chosen"):
                    failures.append(f"record for {rid!r} disagrees with the table")

    gens = engine.k_generators(fam)
    if gens:
        rng = XorShift64Star(1)
        for _ in range(args.products):
            w = engine.random_k_product(gens, rng)
            bad = {b: c for b, c in engine.block_counts(w).items() if c != 0}
            if bad:
                failures.append(f"nonzero signed block counts on a subgroup product: {bad}")
                break

    for line in failures:
        print(f"verify: {line}")
    if failures:
        return 1
    print("verify: ok")
    return 0


def random_instance(rng: XorShift64Star, max_block: int, tag: int) -> list:
    nblocks = rng.randint(1, 3)
    blocks = []
    counter = 0
    for _ in range(nblocks):
        size = rng.randint(1, max_block)
        blocks.append([f"i{tag}s{counter + k}" for k in range(size)])
        counter += size
    return blocks


def cmd_selfcheck(args) -> int:
    if args.instances < 0:
        raise UsageError("--instances must be >= 0")
    if args.max_block < 1:
        raise UsageError("--max-block must be >= 1")
    if args.seed < 1:
        raise UsageError("--seed must be >= 1")

    def fail(prop: str, detail: str) -> int:
        print(f"selfcheck failed: {prop}: {detail}")
        return 1

    rng = XorShift64Star(args.seed)
    stats: Counter = Counter()
    for idx in range(args.instances):
        blocks = random_instance(rng, args.max_block, idx)
        fam = engine.close_under_subsets(blocks, max_block_size=args.max_block)
        basis = engine.build_basis(fam)
        try:
            table = engine.fill_table(fam, basis)
        except InternalProofViolation as exc:
            return fail("proof-identities", f"instance {blocks}: {exc}")

        report = engine.verify(table, fam, basis=basis, products=200)
        if not report.ok:
            return fail("verification", f"instance {blocks}: {report.failures[0]}")

        again = engine.fill_table(fam, engine.build_basis(fam))
        if again.choices != table.choices or again.traces != table.traces:
            return fail("determinism", f"instance {blocks}: two runs disagree")

        gens = engine.k_generators(fam)
        for _ in range(50):
            w = engine.random_k_product(gens, rng, 30)
            if stallings.expand(basis, stallings.rewrite(basis, w)) != w:
                return fail("round-trip", f"instance {blocks}: {format_word(w)}")

        graph = basis.graph
        if basis.rank() != len(graph.edges) - graph.num_vertices + 1:
            return fail("rank-formula", f"instance {blocks}")

        pseed = rng.randint(1, (1 << 32) - 1)
        psteps = rng.randint(1, 15)
        ptable = engine.fill_table(fam, engine.build_basis(fam, pseed, psteps))
        preport = engine.verify(ptable, fam, basis=None, products=0)
        if not preport.ok:
            return fail(
                "perturbation-robustness",
                f"instance {blocks} seed {pseed}: {preport.failures[0]}",
            )

        stats.update(tr.case_tag for tr in table.traces.values())
        stats.update(tr.case_tag for tr in ptable.traces.values())

    print(f"selfcheck: instances={args.instances} max-block={args.max_block} seed={args.seed}")
    for case in engine.ALL_CASES:
        print(f"  case {case}: {stats.get(case, 0)}")
    print("selfcheck: all properties hold")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="freechoice",
        description="Choice functions for families of finite sets via free-group bases.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve an instance file")
    p.add_argument("input")
    p.add_argument("-o", "--output", default=None, help="result file (default stdout)")
    p.add_argument("--all-subsets", action="store_true", help="include the full per-subset table")
    p.add_argument("--seed", type=int, default=0, help="basis perturbation seed (0 = canonical basis)")
    p.add_argument("--perturb-steps", type=int, default=0, help="number of random Nielsen moves")
    p.add_argument("--trace", default=None, metavar="PATH", help="also write per-block traces")
    p.add_argument("--emit-dot", default=None, metavar="PATH", help="also write the folded graph as DOT")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="check a result file against its instance")
    p.add_argument("instance")
    p.add_argument("result")
    p.add_argument("--products", type=int, default=1000, help="random subgroup products to sample")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("trace", help="solve and dump per-block traces")
    p.add_argument("input")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--perturb-steps", type=int, default=0)
    p.add_argument("--block", default=None, help="comma-separated symbols of one block")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("graph", help="export the folded subgroup graph as DOT")
    p.add_argument("input")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("selfcheck", help="randomized invariant suite")
    p.add_argument("--max-block", type=int, default=5)
    p.add_argument("--instances", type=int, default=25)
    p.add_argument("--seed", type=int, default=1)
    p.set_defaults(func=cmd_selfcheck)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FreechoiceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InternalProofViolation as exc:
        print(f"proof-violation: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
