"""Worklist-based query synthesizer.

Enumerates operator skeletons up to a depth bound, instantiates parameter
holes innermost-first, and prunes partial queries with a pluggable abstract
oracle.  Candidates are checked by full provenance consistency and ranked by
query size, then discovery order.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from decimal import Decimal
from typing import Callable, Optional, Sequence

from .abstraction import (Abstractor, PrunerKind, ShapeAnalyzer, ValueAnalyzer,
                          prune_check, prune_check_type, prune_check_value)
from .consistency import MatchWitness, prov_consistent
from .engine import eval_pred, eval_prov, eval_query, extract_groups
from .exprs import (AGG_FNS, ANA_FNS, ARITH_FNS, App, Const, DemoGrid, Expr,
                    check_demo_refs, refs)
from .queries import (AGG_COL, AGG_FN, ARITH_COLS, ARITH_FN, CMP_OP, COLUMNS,
                      PREDICATE, Arith, Atom, BaseTable, ColOperand,
                      ConstOperand, Filter, Group, Hole, Join, LeftJoin,
                      Partition, Predicate, Proj, QueryAST, Sort, children,
                      holes, output_names, size, substitute)
from .tables import Table, Value

UNARY_OPS = ("filter", "proj", "sort", "group", "partition", "arithmetic")
BINARY_OPS = ("join", "left_join")

#: enumeration order for skeleton construction
OPERATOR_ORDER = ("filter", "join", "left_join", "proj", "sort", "group",
                  "partition", "arithmetic")


@dataclass(frozen=True)
class SynthConfig:
    depth: int = 3
    limit: int = 10
    timeout: float = 600.0
    pruner: PrunerKind = PrunerKind.PROVENANCE
    max_keys: int = 4
    operators: Optional[tuple[str, ...]] = None  # None = the default pool
    max_visited: Optional[int] = None  # visit budget for measurement runs
    seed: Optional[int] = None
    #: run-until-correct protocol used by the benchmark harness: stop as soon
    #: as a solution's concrete evaluation equals this table
    stop_output: Optional[Table] = None


@dataclass(frozen=True)
class Solution:
    query: QueryAST
    witness: MatchWitness
    rank: int
    visited_at: int = 0  # worklist pops performed when this query was found


@dataclass
class SynthReport:
    solutions: list[Solution]
    queries_visited: int
    queries_pruned: int
    elapsed: float
    timed_out: bool


class _Fresh:
    def __init__(self):
        self.n = 0

    def __call__(self, kind: str) -> Hole:
        self.n += 1
        return Hole(self.n, kind)


def construct_skeletons(tables: Sequence[str], depth: int,
                        operators: Optional[Sequence[str]] = None
                        ) -> list[QueryAST]:
    """All operator shapes of 1..depth nodes, wrapped in an output projection.

    The wrapper projection is implicit: it aligns columns with the demo and
    does not count toward the depth bound.
    """
    ops = tuple(operators) if operators else OPERATOR_ORDER
    fresh = _Fresh()

    def make(op: str, subs: tuple[QueryAST, ...]) -> QueryAST:
        if op == "filter":
            return Filter(subs[0], fresh(PREDICATE))
        if op == "proj":
            return Proj(subs[0], fresh(COLUMNS))
        if op == "sort":
            return Sort(subs[0], fresh(COLUMNS), fresh(CMP_OP))
        if op == "group":
            return Group(subs[0], fresh(COLUMNS), fresh(AGG_FN), fresh(AGG_COL))
        if op == "partition":
            return Partition(subs[0], fresh(COLUMNS), fresh(AGG_FN), fresh(AGG_COL))
        if op == "arithmetic":
            return Arith(subs[0], fresh(ARITH_FN), fresh(ARITH_COLS))
        if op == "join":
            return Join(subs[0], subs[1])
        return LeftJoin(subs[0], subs[1], fresh(PREDICATE))

    def gen(n: int) -> list[QueryAST]:
        if n == 0:
            return [BaseTable(t) for t in tables]
        out: list[QueryAST] = []
        smaller = gen(n - 1)
        for op in OPERATOR_ORDER:
            if op not in ops:
                continue
            if op in UNARY_OPS:
                out.extend(make(op, (s,)) for s in smaller)
            else:
                for a in range(n):
                    for left in gen(a):
                        for right in gen(n - 1 - a):
                            out.append(make(op, (left, right)))
        return out

    skeletons: list[QueryAST] = []
    for n in range(1, depth + 1):
        skeletons.extend(Proj(s, fresh(COLUMNS)) for s in gen(n))
    return skeletons


# --- hole domains --------------------------------------------------------------


def _find_owner(q: QueryAST, hole_id: int) -> QueryAST:
    for c in children(q):
        if any(h.id == hole_id for h in holes(c)):
            return _find_owner(c, hole_id)
    return q


def _demo_consts(demo: DemoGrid) -> list[Value]:
    seen: list[Value] = []

    def walk(e: Expr) -> None:
        if isinstance(e, Const):
            if not any(v is e.value or v == e.value for v in seen):
                seen.append(e.value)
        elif isinstance(e, App):
            for a in e.args:
                walk(a)

    for row in demo.cells:
        for cell in row:
            walk(cell)
    return seen


def _wants_percent(demo: DemoGrid) -> bool:
    """Demo multiplies something by 100 -- try percent_of first."""

    def walk(e: Expr) -> bool:
        if isinstance(e, App):
            if e.fn == "mul" and any(
                    isinstance(a, Const) and a.value == Decimal(100) for a in e.args):
                return True
            return any(walk(a) for a in e.args)
        return False

    return any(walk(cell) for row in demo.cells for cell in row)


def _mined_fns(demo: DemoGrid) -> set[str]:
    """Function names appearing anywhere in the demonstration."""
    out: set[str] = set()

    def walk(e: Expr) -> None:
        if isinstance(e, App):
            out.add(e.fn)
            for a in e.args:
                walk(a)

    for row in demo.cells:
        for cell in row:
            walk(cell)
    return out


class DomainOracle:
    """Computes candidate bindings for the first hole of a partial query."""

    def __init__(self, inputs: dict[str, Table], demo: DemoGrid,
                 config: SynthConfig):
        self.inputs = inputs
        self.demo = demo
        self.config = config
        self.base_names = {t.id: t.column_names for t in inputs.values()
                           if t.column_names}
        self.consts = _demo_consts(demo)
        self.percent_first = _wants_percent(demo)
        self.mined = _mined_fns(demo)
        self.demo_refs = frozenset().union(
            *(refs(cell) for row in demo.cells for cell in row))
        self._eval_cache: dict[QueryAST, Table] = {}
        self._prov_cache: dict[QueryAST, object] = {}

    def _eval(self, q: QueryAST) -> Table:
        if q not in self._eval_cache:
            self._eval_cache[q] = eval_query(q, self.inputs)
        return self._eval_cache[q]

    def _prov(self, q: QueryAST):
        if q not in self._prov_cache:
            self._prov_cache[q] = eval_prov(q, self.inputs)
        return self._prov_cache[q]

    def _numeric_cols(self, t: Table) -> list[int]:
        return [c for c in range(1, t.n_cols + 1)
                if any(isinstance(r[c - 1], Decimal) for r in t.rows)]

    def domain(self, q: QueryAST, hole: Hole) -> list:
        owner = _find_owner(q, hole.id)
        if hole.kind == PREDICATE:
            return self._predicates(owner)
        if hole.kind == CMP_OP:
            return ["<", ">"]
        if hole.kind == COLUMNS:
            return self._columns(q, owner, hole)
        if hole.kind == AGG_FN:
            return self._fn_domain(AGG_FNS if isinstance(owner, Group) else ANA_FNS)
        if hole.kind == AGG_COL:
            return self._targets(owner)
        if hole.kind == ARITH_FN:
            fns = [f for f in ARITH_FNS if f in self.mined]
            if self.percent_first and "percent_of" not in fns:
                fns.insert(0, "percent_of")
            return fns or list(ARITH_FNS)
        if hole.kind == ARITH_COLS:
            return self._arith_pairs(owner)
        raise AssertionError(hole.kind)

    def _fn_domain(self, pool: Sequence[str]) -> list[str]:
        """Aggregate choices, narrowed to functions the demo mentions.

        A cumulative sum flattens into plain ``sum`` applications in demo
        cells, so a mined ``sum`` licenses ``cumsum`` as well.  With no
        function applications in the demo the full vocabulary stays open.
        """
        if not self.mined:
            return list(pool)
        out = [f for f in pool
               if f in self.mined or (f == "cumsum" and "sum" in self.mined)]
        return out or list(pool)

    def _predicates(self, owner) -> list[Predicate]:
        if isinstance(owner, LeftJoin):
            lt = self._eval(owner.left)
            rt = self._eval(owner.right)
            n_left = lt.n_cols
            out = []
            for i in range(1, n_left + 1):
                for j in range(n_left + 1, n_left + rt.n_cols + 1):
                    out.append(Predicate((Atom(i, "==", ColOperand(j)),)))
            return out
        t = self._eval(owner.source)
        cands = []
        for c in range(1, t.n_cols + 1):
            col_numeric = any(isinstance(r[c - 1], Decimal) for r in t.rows)
            for v in self.consts:
                if isinstance(v, Decimal) and col_numeric:
                    cands.extend(Predicate((Atom(c, op, ConstOperand(v)),))
                                 for op in ("==", "<", "<=", ">", ">="))
                elif isinstance(v, str) and not col_numeric:
                    cands.append(Predicate((Atom(c, "==", ConstOperand(v)),)))
        for i in range(1, t.n_cols + 1):
            for j in range(i + 1, t.n_cols + 1):
                cands.append(Predicate((Atom(i, "==", ColOperand(j)),)))
        return self._useful_predicates(owner.source, t, cands)

    def _useful_predicates(self, source: QueryAST, t: Table,
                           cands: list[Predicate]) -> list[Predicate]:
        """Drop filters that keep every row (the unfiltered query is already
        enumerated) or remove rows the demonstration references."""
        prov = self._prov(source)
        row_refs = [frozenset().union(*(refs(c) for c in row))
                    for row in prov.cells]
        relevant = self.demo_refs & frozenset().union(*row_refs, frozenset())
        out = []
        for pred in cands:
            kept = [i for i, row in enumerate(t.rows) if eval_pred(pred, row)]
            if len(kept) == t.n_rows:
                continue
            kept_refs = frozenset().union(*(row_refs[i] for i in kept),
                                          frozenset())
            if relevant <= kept_refs:
                out.append(pred)
        return out

    def _columns(self, q: QueryAST, owner, hole: Hole) -> list[tuple[int, ...]]:
        t = self._eval(owner.source)
        n = t.n_cols
        if isinstance(owner, Proj) and owner is q:
            return self._final_proj(owner, n)
        if isinstance(owner, Proj):
            return [cols for k in range(1, n + 1)
                    for cols in itertools.combinations(range(1, n + 1), k)]
        if isinstance(owner, Sort):
            return [(c,) for c in self._numeric_cols(t)]
        # group/partition keys
        top = min(self.config.max_keys, n - 1)
        cands = [cols for k in range(1, top + 1)
                 for cols in itertools.combinations(range(1, n + 1), k)]
        if isinstance(owner, Partition):
            return self._partition_keys(owner, cands)
        return cands

    def _final_proj(self, owner: Proj, n: int) -> list[tuple[int, ...]]:
        """Column choices for the implicit output projection.

        Candidates per demo column are narrowed by a necessary condition for
        provenance consistency: every demo cell's references must be covered
        by some source cell in that column.  This shrinks the domain without
        excluding any consistent query.
        """
        m = self.demo.n_cols
        if m > n:
            return []
        prov = eval_prov(owner.source, self.inputs)
        demo_refs = [[refs(cell) for cell in row] for row in self.demo.cells]
        col_refs = [[refs(prov.cells[r][c]) for r in range(prov.n_rows)]
                    for c in range(n)]
        cands: list[list[int]] = []
        for j in range(m):
            hits = [c + 1 for c in range(n)
                    if all(any(demo_refs[i][j] <= cell for cell in col_refs[c])
                           for i in range(len(demo_refs)))]
            cands.append(hits)
        out = []
        for combo in itertools.product(*cands):
            if len(set(combo)) == m:
                out.append(tuple(combo))
        return out

    def _arith_pairs(self, owner: Arith) -> list[tuple[int, int]]:
        """Operand column pairs for an arithmetic operator.

        A pair is kept only when its new column could explain at least one
        demo column.  The new column's cells are applications of the chosen
        function, so a demo column qualifies only if all its cells are
        applications with the same top-level function, and for every demo
        row some source row's operand cells jointly cover the demo cell's
        references.  Pairs failing this yield queries whose arithmetic
        column is unusable by the demo; the arithmetic-free variant of such
        a query is enumerated separately.
        """
        t = self._eval(owner.source)
        nums = self._numeric_cols(t)
        prov = self._prov(owner.source)
        row_refs = [[refs(cell) for cell in row] for row in prov.cells]
        # percent_of(a, b) produces mul(div(a, b), 100)
        top_fn = "mul" if owner.fn == "percent_of" else owner.fn
        cols = []
        for j in range(self.demo.n_cols):
            cells = [row[j] for row in self.demo.cells]
            if all(isinstance(c, App) and c.fn == top_fn for c in cells):
                cols.append([refs(c) for c in cells])
        out = []
        for a in nums:
            for b in nums:
                if a == b:
                    continue
                ok = any(
                    all(any(need <= rr[a - 1] | rr[b - 1] for rr in row_refs)
                        for need in col)
                    for col in cols)
                if ok:
                    out.append((a, b))
        return out

    def _partition_keys(self, owner: Partition,
                        cands: list[tuple[int, ...]]) -> list[tuple[int, ...]]:
        """Deduplicate partition keys by the row partition they induce.

        Unlike grouping, partitioning never displays its keys -- the output
        is the source plus one analytical column -- so two key sets that
        split the rows identically produce identical queries.  Only the
        first key set of each equivalence class is kept.
        """
        t = self._eval(owner.source)
        seen: set[tuple[tuple[int, ...], ...]] = set()
        out = []
        for keys in cands:
            part = tuple(tuple(g) for g in extract_groups(t.rows, keys))
            if part not in seen:
                seen.add(part)
                out.append(keys)
        return out

    def _targets(self, owner) -> list[int]:
        t = self._eval(owner.source)
        keys = owner.keys if isinstance(owner.keys, tuple) else ()
        if owner.fn == "count":
            pool = range(1, t.n_cols + 1)
        else:
            pool = self._numeric_cols(t)
        cands = [c for c in pool if c not in keys]
        mined = self._mined_agg_cols()
        if owner.fn == "count" or mined is None:
            return cands
        prov = self._prov(owner.source)
        out = []
        for c in cands:
            col_refs = frozenset().union(
                *(refs(row[c - 1]) for row in prov.cells), frozenset())
            if {(r.table, r.col) for r in col_refs} <= mined:
                out.append(c)
        return out

    def _mined_agg_cols(self) -> Optional[set[tuple[str, int]]]:
        """Base columns appearing under aggregate applications in the demo.

        Aggregate targets are narrowed to source columns built from those
        base columns, in the same spirit as function mining.  Returns None
        (no narrowing) when the demo shows no aggregate applications.
        """
        found: set[tuple[str, int]] = set()
        seen_agg = False

        def walk(e: Expr) -> None:
            nonlocal seen_agg
            if isinstance(e, App):
                if e.fn in ANA_FNS:
                    seen_agg = True
                    for a in e.args:
                        for r in refs(a):
                            found.add((r.table, r.col))
                else:
                    for a in e.args:
                        walk(a)

        for row in self.demo.cells:
            for cell in row:
                walk(cell)
        return found if seen_agg else None


# --- the search loop ------------------------------------------------------------


def _make_pruner(kind: PrunerKind, inputs: dict[str, Table],
                 demo: DemoGrid) -> Optional[Callable[[QueryAST], bool]]:
    if kind == PrunerKind.NONE:
        return None
    if kind == PrunerKind.PROVENANCE:
        abstractor = Abstractor(inputs)
        demo_masks = abstractor.demo_masks(demo)
        return lambda q: prune_check(q, inputs, demo, abstractor, demo_masks)
    if kind == PrunerKind.TYPE_ABS:
        analyzer = ShapeAnalyzer(inputs)
        return lambda q: prune_check_type(q, inputs, demo, analyzer)
    analyzer = ValueAnalyzer(inputs)
    return lambda q: prune_check_value(q, inputs, demo, analyzer)


def choose_next_hole(q: QueryAST) -> Optional[Hole]:
    hs = holes(q)
    return hs[0] if hs else None


def synthesize(inputs: dict[str, Table], demo: DemoGrid,
               config: SynthConfig = SynthConfig()) -> SynthReport:
    """Search for concrete queries whose provenance generalizes the demo.

    The worklist is a stack: each skeleton's hole instantiations are explored
    to completion before the next skeleton starts.  Skeletons are taken in
    ascending size so small queries surface first; within a size the shapes
    whose outermost operator computes a new column (arithmetic, partition,
    group) are tried before purely structural ones, since demonstrations of
    computed cells can only be satisfied by the former.
    """
    start = time.monotonic()
    check_demo_refs(demo, inputs)
    pruner = _make_pruner(config.pruner, inputs, demo)
    oracle = DomainOracle(inputs, demo, config)
    skeletons = construct_skeletons(sorted(inputs), config.depth,
                                    config.operators)
    # stack seeding: push largest sizes first (popped last); within a size
    # keep enumeration order, so the last-enumerated shapes pop first
    work: list[QueryAST] = sorted(skeletons, key=size, reverse=True)
    found: list[QueryAST] = []
    witnesses: dict[int, tuple[MatchWitness, int]] = {}
    visited = pruned = 0
    timed_out = False

    while work:
        if len(found) >= config.limit:
            break
        if config.max_visited is not None and visited >= config.max_visited:
            break
        if time.monotonic() - start > config.timeout:
            timed_out = True
            break
        q = work.pop()
        visited += 1
        hole = choose_next_hole(q)
        if hole is None:
            witness = prov_consistent(eval_prov(q, inputs), demo)
            if witness is not None:
                witnesses[len(found)] = (witness, visited)
                found.append(q)
                if (config.stop_output is not None
                        and eval_query(q, inputs) == config.stop_output):
                    break
            continue
        if pruner is not None and not pruner(q):
            pruned += 1
            continue
        for binding in reversed(oracle.domain(q, hole)):
            work.append(substitute(q, hole.id, binding))

    order = sorted(range(len(found)), key=lambda i: (size(found[i]), i))
    solutions = [Solution(found[i], witnesses[i][0], rank + 1, witnesses[i][1])
                 for rank, i in enumerate(order)]
    return SynthReport(solutions, visited, pruned,
                       time.monotonic() - start, timed_out)
