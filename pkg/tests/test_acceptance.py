"""Acceptance gate: one test (and one PASS/FAIL line) per acceptance criterion.

Acceptance is property-based plus golden-example reproduction at desk scale:

  C1  running example end-to-end through the CLI within 120 s
  C2  provenance-semantics goldens of the running-example query
  C3  consistency unit suite plus the pruning scenario (q_B UNSAT, q_E SAT)
  C4  abstract provenance over-approximates concrete provenance
      (>= 1000 randomized triples, 0 violations, <= 5 min)
  C5  pruning soundness: identical solution sets across all pruners
      on >= 20 micro-benchmarks
  C6  pruning effectiveness: visited(provenance) < visited(value)
      <= visited(type), provenance <= 5000
  C7  master semantics invariant: cellwise evaluation of provenance
      equals concrete evaluation on 500 random queries
  C8  harness closure and a 10-item generated suite with gt_rank = 1
      for >= 8 items
  C9  [secondary] UI contract: demo JSON round-trips through the HTTP API
"""
import csv
import json
import os
import random
import subprocess
import sys
import time
from decimal import Decimal

from click.testing import CliRunner
from fastapi.testclient import TestClient

from provsynth import (App, Arith, BaseTable, Benchmark, CellRef, DemoGrid,
                       Group, GroupSet, Hole, Partition, Proj, PrunerKind,
                       SynthConfig, Table, eval_prov, eval_prov_table,
                       eval_query, format_expr, generate_demo, holes,
                       parse_demo, prov_consistent, prune_check,
                       query_from_json, query_to_json, refs, save_benchmark,
                       substitute, synthesize, values_equal)
from provsynth.cli import main
from provsynth.queries import (AGG_COL, AGG_FN, ARITH_COLS, ARITH_FN, COLUMNS)
from provsynth.server import app

sys.path.insert(0, os.path.dirname(__file__))
from randgen import punch_holes, random_query, random_table  # noqa: E402


def _gate(label: str, ok: bool, detail: str = "") -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {label}")
    assert ok, f"{label}: {detail}"


def run_cli(*args):
    return CliRunner().invoke(main, list(args))


# --- C1: running example end-to-end -------------------------------------------

C1 = ("C1 running example: synth --depth 3 --pruner provenance recovers the "
      "ground-truth computation within 120 s")


def test_c1_running_example_end_to_end(csv_path, demo_path, inputs, gt_query):
    start = time.monotonic()
    res = run_cli("synth", "--table", f"T={csv_path}", "--demo", demo_path,
                  "--depth", "3", "--pruner", "provenance", "--json")
    elapsed = time.monotonic() - start
    detail = f"exit={res.exit_code} elapsed={elapsed:.1f}s"
    ok = res.exit_code == 0 and elapsed < 120.0
    hit = None
    if ok:
        gt_out = eval_query(gt_query, inputs)
        for s in json.loads(res.output)["solutions"]:
            q = query_from_json(s["query"])
            if eval_query(q, inputs) == gt_out:
                hit = q
                break
        ok = hit is not None
        detail += f" hit={'yes' if hit else 'no'}"
    if ok:
        out = eval_query(hit, inputs)
        a_rows = sorted((r for r in out.rows if r[0] == "A"),
                        key=lambda r: r[1])
        want = [Decimal("53.5"), Decimal("64.1"), Decimal("70.9"),
                Decimal("88.3")]
        ok = (len(a_rows) == 4
              and all(abs(r[2] - w) < Decimal("0.1")
                      for r, w in zip(a_rows, want)))
    _gate(C1, ok, detail)


# --- C2: provenance-semantics goldens ------------------------------------------

C2 = ("C2 provenance goldens: row 1 city is group{T[1,1],T[2,1]}; row 4 "
      "percentage sums exactly T[1,4]..T[8,4]")


def _collect_sums(expr):
    out = []
    if isinstance(expr, App):
        if expr.fn == "sum":
            out.append(expr)
        for a in expr.args:
            out.extend(_collect_sums(a))
    elif isinstance(expr, GroupSet):
        for m in expr.members:
            out.extend(_collect_sums(m))
    return out


def test_c2_provenance_goldens(gt_query, inputs):
    t_star = eval_prov(gt_query, inputs)
    ok = format_expr(t_star.cells[0][0]) == "group{T[1,1],T[2,1]}"
    sums = _collect_sums(t_star.cells[3][2])
    ok = ok and len(sums) == 1 and refs(sums[0]) == frozenset(
        CellRef("T", r, 4) for r in range(1, 9))
    _gate(C2, ok, format_expr(t_star.cells[3][2]))


# --- C3: consistency suite and pruning scenario ---------------------------------

C3 = ("C3 consistency: unit suite green; pruning scenario q_B UNSAT and the "
      "solution instantiation path SAT")


def test_c3_consistency_suite_and_pruning_scenario(inputs, demo):
    suite = os.path.join(os.path.dirname(__file__), "test_consistency.py")
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", suite],
                          capture_output=True, text=True)
    ok = proc.returncode == 0

    # q_B: arithmetic over a fully-keyed group can never pack T[1,4], T[2,4]
    # and T[8,4] into one cell, so provenance pruning rejects it
    q_b = Arith(Group(BaseTable("T"), (1, 2, 5), Hole(1, AGG_FN),
                      Hole(2, AGG_COL)),
                Hole(3, ARITH_FN), Hole(4, ARITH_COLS))
    ok = ok and prune_check(q_b, inputs, demo) is False

    # q_E: every step along the known solution's instantiation chain is SAT
    chain = Proj(
        Arith(Partition(Group(BaseTable("T"), Hole(1, COLUMNS),
                              Hole(2, AGG_FN), Hole(3, AGG_COL)),
                        Hole(4, COLUMNS), Hole(5, AGG_FN), Hole(6, AGG_COL)),
              Hole(7, ARITH_FN), Hole(8, ARITH_COLS)),
        Hole(9, COLUMNS))
    bindings = {1: (1, 2, 5), 2: "sum", 3: 4, 4: (1,), 5: "cumsum", 6: 4,
                7: "percent_of", 8: (5, 3), 9: (1, 2, 6)}
    q = chain
    ok = ok and prune_check(q, inputs, demo) is True
    for h in [h.id for h in holes(chain)]:
        q = substitute(q, h, bindings[h])
        ok = ok and prune_check(q, inputs, demo) is True
    _gate(C3, ok, proc.stdout[-300:])


# --- C4: over-approximation property --------------------------------------------

C4 = ("C4 over-approximation: abstract provenance of a partial query covers "
      "every instantiation's concrete provenance (1000 triples, 0 violations)")


def _demo_cell(expr):
    # demonstration cells cannot hold group nodes; a user demonstrates a
    # grouped cell through one of its members, which any group cell matches
    if isinstance(expr, GroupSet):
        return _demo_cell(expr.members[0])
    if isinstance(expr, App):
        return App(expr.fn, tuple(_demo_cell(a) for a in expr.args),
                   expr.partial)
    return expr


def _demo_from_prov(t_star):
    return DemoGrid(None, tuple(tuple(_demo_cell(c) for c in row)
                                for row in t_star.cells[:2]))


def test_c4_overapproximation_property():
    start = time.monotonic()
    violations, count, seed = 0, 0, 0
    while count < 1000:
        rng = random.Random(("overapprox", seed).__repr__())
        seed += 1
        inputs = {"T": random_table(rng)}
        if rng.random() < 0.3:
            inputs["U"] = random_table(rng, "U")
        try:
            q_star = random_query(rng, inputs, rng.randint(1, 2))
        except AssertionError:
            continue
        t_star = eval_prov(q_star, inputs)
        if not t_star.n_rows:
            continue
        # any demonstration drawn from the instantiation's own provenance
        # must stay SAT under the partial query's abstract check
        q = punch_holes(rng, q_star)
        demo = _demo_from_prov(t_star)
        if prune_check(q, inputs, demo) is not True:
            violations += 1
        count += 1
    elapsed = time.monotonic() - start
    _gate(C4, violations == 0 and count >= 1000 and elapsed <= 300.0,
          f"violations={violations} triples={count} elapsed={elapsed:.0f}s")


# --- C5: pruning soundness -------------------------------------------------------

C5 = ("C5 pruning soundness: identical solution sets for pruners "
      "{none, provenance, type, value} on 20 micro-benchmarks")

_POOLS = ([("group", "partition", "arithmetic")] * 12
          + [("filter", "proj", "sort")] * 4
          + [("join", "left_join", "proj")] * 4)


def test_c5_pruning_soundness_micro_benchmarks():
    mismatches = []
    for i, pool in enumerate(_POOLS):
        rng = random.Random(("soundness", i).__repr__())
        inputs = {"T": random_table(rng)}
        if "join" in pool:
            inputs["U"] = random_table(rng, "U")
        q_star = random_query(rng, inputs, rng.randint(1, 2))
        t_star = eval_prov(q_star, inputs)
        demo = _demo_from_prov(t_star)
        results = {}
        for pruner in PrunerKind:
            cfg = SynthConfig(depth=2, limit=64, timeout=120.0,
                              pruner=pruner, operators=pool)
            rep = synthesize(inputs, demo, cfg)
            results[pruner.value] = {
                json.dumps(query_to_json(s.query), sort_keys=True)
                for s in rep.solutions}
        if any(v != results["none"] for v in results.values()):
            mismatches.append(i)
    _gate(C5, not mismatches, f"benchmarks with differing sets: {mismatches}")


# --- C6: pruning effectiveness directionality ------------------------------------

C6 = ("C6 pruning effectiveness: visited(provenance) < visited(value) "
      "<= visited(type); provenance <= 5000")


def test_c6_pruning_effectiveness_directionality(inputs, demo, gt_query):
    # Measured in the reduced three-operator search space in which the
    # directional claim is stated; the full operator pool is exercised
    # end-to-end by C1.  The search runs until the correct query surfaces,
    # so the counts measure work-to-solution.
    gt_out = eval_query(gt_query, inputs)
    visited = {}
    for pruner in (PrunerKind.PROVENANCE, PrunerKind.VALUE_ABS,
                   PrunerKind.TYPE_ABS):
        cfg = SynthConfig(depth=3, limit=10_000, timeout=600.0, pruner=pruner,
                          operators=("group", "partition", "arithmetic"),
                          stop_output=gt_out)
        rep = synthesize(inputs, demo, cfg)
        hits = [s for s in rep.solutions
                if eval_query(s.query, inputs) == gt_out]
        assert hits, f"{pruner.value}: ground truth not found"
        visited[pruner.value] = rep.queries_visited
    ok = (visited["provenance"] < visited["value"] <= visited["type"]
          and visited["provenance"] <= 5000)
    _gate(C6, ok, f"visited={visited}")


# --- C7: master semantics invariant ----------------------------------------------

C7 = ("C7 master invariant: cellwise evaluation of provenance equals direct "
      "evaluation on 500 random concrete queries")


def test_c7_master_semantics_invariant():
    violations = 0
    for seed in range(500):
        rng = random.Random(("master", seed).__repr__())
        inputs = {"T": random_table(rng)}
        if rng.random() < 0.3:
            inputs["U"] = random_table(rng, "U")
        q = random_query(rng, inputs, rng.randint(1, 2))
        conc = eval_query(q, inputs)
        via_prov = eval_prov_table(eval_prov(q, inputs), inputs)
        same = (via_prov.n_rows == conc.n_rows
                and all(values_equal(a, b)
                        for ra, rb in zip(via_prov.rows, conc.rows)
                        for a, b in zip(ra, rb)))
        if not same:
            violations += 1
    _gate(C7, violations == 0, f"violations={violations}")


# --- C8: harness closure and suite ranking ---------------------------------------

C8 = ("C8 harness: every generated demo is consistent with its ground truth; "
      "bench over a 10-item suite reports gt_rank=1 for >= 8 items")


def _suite_table(i: int) -> Table:
    rng = random.Random(("suite-table", i).__repr__())
    cats = ["a", "a", "b", "b", "c", "c", "d", "d"]
    rng.shuffle(cats)
    nums = rng.sample(range(11, 997), 24)
    rows = [(cats[r], Decimal(nums[3 * r]), Decimal(nums[3 * r + 1]),
             Decimal(nums[3 * r + 2])) for r in range(8)]
    return Table.make("T", rows)


_SUITE_GTS = [
    Arith(BaseTable("T"), "add", (2, 3)),
    Arith(BaseTable("T"), "mul", (2, 4)),
    Proj(Arith(BaseTable("T"), "sub", (3, 2)), (1, 5)),
    Arith(BaseTable("T"), "div", (4, 2)),
    Partition(BaseTable("T"), (1,), "sum", 2),
    Partition(BaseTable("T"), (1,), "cumsum", 3),
    Partition(BaseTable("T"), (1,), "max", 4),
    Proj(BaseTable("T"), (2, 1)),
    Proj(BaseTable("T"), (1, 3, 4)),
    Group(BaseTable("T"), (1,), "sum", 2),
]


def test_c8_harness_closure_and_suite_ranking(tmp_path):
    suite_dir = tmp_path / "suite"
    for i, gt in enumerate(_SUITE_GTS):
        inputs = {"T": _suite_table(i)}
        sampled, demo = generate_demo(inputs, gt, seed=i)
        # generate_demo already enforces closure; re-check it explicitly
        assert prov_consistent(eval_prov(gt, sampled), demo) is not None
        save_benchmark(Benchmark(f"b{i:02d}", sampled, demo, gt),
                       str(suite_dir))
    out_csv = tmp_path / "results.csv"
    res = run_cli("bench", "--dir", str(suite_dir), "--out", str(out_csv),
                  "--depth", "2", "--pruner", "provenance",
                  "--timeout", "120")
    ok = res.exit_code == 0
    rows = list(csv.DictReader(open(out_csv))) if ok else []
    top1 = sum(1 for r in rows if r["gt_rank"] == "1")
    ok = (ok and len(rows) == 10 and all(r["solved"] == "yes" for r in rows)
          and top1 >= 8)
    _gate(C8, ok, f"exit={res.exit_code} rows={len(rows)} top1={top1} "
          f"ranks={[r.get('gt_rank') for r in rows]}")


# --- C9 (secondary): UI contract --------------------------------------------------

C9 = ("C9 [secondary] UI contract: demo JSON round-trips through "
      "POST /api/synthesize with a 'Partition By' candidate")


def test_c9_secondary_ui_contract(csv_path, demo_path, demo_json):
    # the canonical demo JSON stands in for a demo-studio export; the
    # frontend's own tests pin its export to this format
    assert parse_demo(open(demo_path).read()).cells
    client = TestClient(app)
    payload = {"tables": {"T": open(csv_path).read()},
               "demo": demo_json,
               "config": {"depth": 3, "limit": 1, "pruner": "provenance"}}
    res = client.post("/api/synthesize", json=payload)
    ok = res.status_code == 200
    sols = res.json().get("solutions", []) if ok else []
    ok = ok and any("Partition By" in s["sql"] for s in sols)
    _gate(C9, ok, f"status={res.status_code} solutions={len(sols)}")
