"""Benchmark generation and batch experiment running.

``generate_demo`` turns a (inputs, ground-truth query) pair into a small
partial demonstration the way a user would: sample the inputs, evaluate the
ground truth with provenance, pick two output rows, shuffle commutative
argument lists, and truncate long expressions with an omission marker.
``run_suite`` replays a benchmark directory against several pruners and
reports solve times, visit counts, and the rank of the correct query.
"""
from __future__ import annotations

import csv
import io
import json
import os
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

from .consistency import prov_consistent
from .engine import eval_prov, eval_query
from .exprs import App, DemoGrid, Expr, GroupSet, demo_from_json, demo_to_json
from .queries import QueryAST, is_concrete, query_from_json, query_to_json
from .synth import SynthConfig, synthesize
from .tables import Table, load_table, write_table

#: functions whose argument order carries no meaning
COMMUTATIVE_FNS = ("sum", "avg", "max", "min", "count", "add", "mul")

#: truncation threshold: expressions with more leaves get an omission marker
MAX_DEMO_LEAVES = 4

SAMPLE_ROWS = 20
DEMO_ROWS = 2


class HarnessError(ValueError):
    pass


def _leaves(expr: Expr) -> int:
    if isinstance(expr, App):
        return sum(_leaves(a) for a in expr.args)
    if isinstance(expr, GroupSet):
        return sum(_leaves(m) for m in expr.members)
    return 1


def _demoize(expr: Expr, rng: random.Random) -> Expr:
    """Turn a provenance expression into a demonstration expression."""
    if isinstance(expr, GroupSet):
        # A user demonstrates a grouped cell by dragging one of its members.
        # Prefer leaf members: an application chosen here could later be
        # flattened into an enclosing application of the same function,
        # which the closure check below would reject.
        leaves = [m for m in expr.members if not isinstance(m, App)]
        pool = leaves or list(expr.members)
        return _demoize(rng.choice(pool), rng)
    if not isinstance(expr, App):
        return expr
    args = [_demoize(a, rng) for a in expr.args]
    partial = expr.partial
    if expr.fn in COMMUTATIVE_FNS:
        rng.shuffle(args)
    keep = max(MAX_DEMO_LEAVES, 2)
    if (len(args) > keep
            and _leaves(App(expr.fn, tuple(args), partial)) > MAX_DEMO_LEAVES):
        # keep the outer arguments; the omission marker stands in for the
        # contiguous middle run that was dropped
        head, tail = args[: keep // 2], args[-(keep - keep // 2):]
        args = head + tail
        partial = True
    return App(expr.fn, tuple(args), partial)


def sample_inputs(inputs: dict[str, Table], seed: int) -> dict[str, Table]:
    """Cap every input at SAMPLE_ROWS rows, preserving row order."""
    rng = random.Random(("sample", seed).__repr__())
    out = {}
    for tid in sorted(inputs):
        t = inputs[tid]
        if t.n_rows <= SAMPLE_ROWS:
            out[tid] = t
        else:
            idx = sorted(rng.sample(range(t.n_rows), SAMPLE_ROWS))
            rows = [t.rows[i] for i in idx]
            out[tid] = Table.make(tid, rows, t.column_names)
    return out


def generate_demo(inputs: dict[str, Table], ground_truth: QueryAST,
                  seed: int = 0) -> tuple[dict[str, Table], DemoGrid]:
    """Derive a 2-row partial demonstration from a ground-truth query."""
    if not is_concrete(ground_truth):
        raise HarnessError("ground truth query must be concrete")
    sampled = sample_inputs(inputs, seed)
    t_star = eval_prov(ground_truth, sampled)
    if t_star.n_rows < DEMO_ROWS:
        raise HarnessError(
            f"ground truth yields {t_star.n_rows} output row(s); "
            f"need at least {DEMO_ROWS} -- use a larger input sample")
    rng = random.Random(("demo", seed).__repr__())
    picks = sorted(rng.sample(range(t_star.n_rows), DEMO_ROWS))
    cells = tuple(tuple(_demoize(c, rng) for c in t_star.cells[i])
                  for i in picks)
    demo = DemoGrid(t_star.column_names, cells)
    if prov_consistent(t_star, demo) is None:
        raise HarnessError("generated demonstration is inconsistent with "
                           "its own ground truth")
    return sampled, demo


# --- benchmark persistence ----------------------------------------------------


@dataclass(frozen=True)
class Benchmark:
    name: str
    inputs: dict[str, Table]
    demo: DemoGrid
    ground_truth: QueryAST


def save_benchmark(bench: Benchmark, root: str) -> str:
    d = os.path.join(root, bench.name)
    os.makedirs(os.path.join(d, "tables"), exist_ok=True)
    for tid, t in bench.inputs.items():
        with open(os.path.join(d, "tables", f"{tid}.csv"), "w") as f:
            f.write(write_table(t))
    with open(os.path.join(d, "demo.json"), "w") as f:
        json.dump(demo_to_json(bench.demo), f, indent=2)
    with open(os.path.join(d, "gt.json"), "w") as f:
        json.dump(query_to_json(bench.ground_truth), f, indent=2)
    return d


def load_benchmark(path: str) -> Benchmark:
    name = os.path.basename(os.path.normpath(path))
    inputs = {}
    tdir = os.path.join(path, "tables")
    for fn in sorted(os.listdir(tdir)):
        if fn.endswith(".csv"):
            tid = fn[:-4]
            inputs[tid] = load_table(os.path.join(tdir, fn), tid)
    with open(os.path.join(path, "demo.json")) as f:
        demo = demo_from_json(json.load(f))
    with open(os.path.join(path, "gt.json")) as f:
        gt = query_from_json(json.load(f))
    return Benchmark(name, inputs, demo, gt)


def load_suite(root: str) -> list[Benchmark]:
    out = []
    for name in sorted(os.listdir(root)):
        d = os.path.join(root, name)
        if os.path.isdir(d) and os.path.exists(os.path.join(d, "gt.json")):
            out.append(load_benchmark(d))
    return out


# --- the experiment runner ------------------------------------------------------

CSV_COLUMNS = ("bench", "pruner", "solved", "seconds", "visited", "pruned",
               "gt_rank")


def run_one(bench: Benchmark, config: SynthConfig) -> dict:
    """Run one benchmark with one configuration, until the correct query.

    Correctness means output-table equality with the ground truth on the
    benchmark inputs, not syntactic equality.  The search keeps going past
    earlier (incorrect) solutions until the correct one surfaces, so the
    visit count measures work-to-solution and gt_rank its final rank.
    """
    try:
        gt_out = eval_query(bench.ground_truth, bench.inputs)
        cfg = replace(config, stop_output=gt_out)
        report = synthesize(bench.inputs, bench.demo, cfg)
        hit = next((s for s in report.solutions
                    if eval_query(s.query, bench.inputs) == gt_out), None)
        return {
            "bench": bench.name,
            "pruner": config.pruner.value,
            "solved": hit is not None,
            "seconds": round(report.elapsed, 3),
            "visited": hit.visited_at if hit else report.queries_visited,
            "pruned": report.queries_pruned,
            "gt_rank": hit.rank if hit else "",
        }
    except Exception as exc:  # record, don't abort the suite
        return {"bench": bench.name, "pruner": config.pruner.value,
                "solved": False, "seconds": "", "visited": "", "pruned": "",
                "gt_rank": "", "error": str(exc)}


def run_suite(benchmarks: Sequence[Benchmark],
              configs: Sequence[SynthConfig],
              workers: int = 1) -> list[dict]:
    jobs = [(b, c) for b in benchmarks for c in configs]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda bc: run_one(*bc), jobs))
    return [run_one(b, c) for (b, c) in jobs]


def report_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([{True: "yes", False: "no"}.get(r[c], r[c])
                    if c == "solved" else r[c] for c in CSV_COLUMNS])
    return buf.getvalue()
