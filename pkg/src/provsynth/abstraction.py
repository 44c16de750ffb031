"""Abstract semantics for partial queries and the pruning oracles.

``eval_abs`` over-approximates, per output cell, the set of input cells whose
values can flow there under *any* instantiation of the remaining holes.  The
precision tier depends on how much of an operator is instantiated:

* weak -- no parameters known: new cells union everything reachable;
* medium -- keys known: unions restricted to non-key columns;
* strong -- keys known and key columns concretely evaluable: unions range
  only over the row's own group.

Internally cells are bitmasks over a per-run universe of input cell
references; the public ``eval_abs`` surfaces them as frozensets.

Two baseline pruning oracles (table-shape tracking and known-value tracking)
share the SAT/UNSAT interface so the synthesizer can swap them in.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import reduce
from operator import or_
from typing import Optional, Sequence, Union

from .consistency import _match_rows, demo_ref_grid
from .engine import eval_prov, eval_query, extract_groups
from .exprs import App, DemoGrid, eval_expr, refs
from .queries import (Arith, BaseTable, Filter, Group, Hole, Join, LeftJoin,
                      Partition, Proj, QueryAST, Sort, is_concrete)
from .tables import CellRef, Table, Value, values_equal

#: abstract tables larger than this are treated as too abstract to reason about
ROW_CAP = 10_000


class PrunerKind(enum.Enum):
    PROVENANCE = "provenance"
    TYPE_ABS = "type"
    VALUE_ABS = "value"
    NONE = "none"


@dataclass(frozen=True)
class AbsTable:
    """Grid of input-cell reference sets (the public view)."""

    rows: tuple[tuple[frozenset[CellRef], ...], ...]

    @property
    def n_cols(self) -> int:
        return len(self.rows[0]) if self.rows else 0


@dataclass(frozen=True)
class _BitTable:
    """Bitmask grid.

    ``stable`` records whether column positions still correspond one-to-one
    to the real output columns of every instantiation; it is dropped (and
    the weak rules used) once a hole makes column identity uncertain.
    Duplicate rows are kept on purpose: consistency maps demo rows
    injectively into abstract rows, so collapsing identical rows could
    wrongly rule out demos with more rows than distinct abstractions.
    """

    rows: tuple[tuple[int, ...], ...]
    stable: bool = True

    @property
    def n_cols(self) -> int:
        return len(self.rows[0]) if self.rows else 0


#: returned instead of a table when no rule pattern applies
TOO_ABSTRACT = None

BitResult = Optional[_BitTable]


def _cap(rows: Sequence[tuple[int, ...]]) -> Optional[tuple]:
    if len(rows) > ROW_CAP:
        return None
    return tuple(rows)


def _union(masks) -> int:
    return reduce(or_, masks, 0)


class Abstractor:
    """Abstract evaluator with per-node memoization for one set of inputs."""

    def __init__(self, inputs: dict[str, Table]):
        self.inputs = inputs
        self._cache: dict[QueryAST, BitResult] = {}
        self._index: dict[CellRef, int] = {}
        self._by_index: list[CellRef] = []
        for tid in sorted(inputs):
            t = inputs[tid]
            for i in range(1, t.n_rows + 1):
                for j in range(1, t.n_cols + 1):
                    ref = CellRef(tid, i, j)
                    self._index[ref] = len(self._by_index)
                    self._by_index.append(ref)
        self._mask_cache: dict[frozenset, int] = {}
        self._keyvals: dict[tuple, Optional[list]] = {}
        self._groups: dict[tuple, list] = {}

    def mask_of(self, cells: frozenset) -> int:
        m = self._mask_cache.get(cells)
        if m is None:
            m = 0
            for ref in cells:
                m |= 1 << self._index[ref]
            self._mask_cache[cells] = m
        return m

    def refset_of(self, mask: int) -> frozenset:
        out = []
        while mask:
            low = mask & -mask
            out.append(self._by_index[low.bit_length() - 1])
            mask ^= low
        return frozenset(out)

    def _lift_concrete(self, q: QueryAST) -> BitResult:
        prov = eval_prov(q, self.inputs)
        rows = _cap([tuple(self.mask_of(refs(c)) for c in row)
                     for row in prov.cells])
        if rows is None:
            return TOO_ABSTRACT
        return _BitTable(rows, stable=True)

    def _cell_value(self, mask: int) -> Optional[Value]:
        """Value of an abstract cell when it pins down exactly one input cell."""
        if mask == 0 or mask & (mask - 1):
            return None
        ref = self._by_index[mask.bit_length() - 1]
        return self.inputs[ref.table].cell(ref.row, ref.col)

    def _key_values(self, sub: _BitTable,
                    keys: tuple[int, ...]) -> Optional[list[tuple]]:
        """Evaluated key tuples per row, or None when any key cell is abstract."""
        memo_key = (id(sub), keys)
        if memo_key in self._keyvals:
            return self._keyvals[memo_key]
        out: Optional[list[tuple]] = []
        for row in sub.rows:
            vals = []
            for c in keys:
                mask = row[c - 1]
                if mask == 0 or mask & (mask - 1):
                    out = None
                    break
                vals.append(self._cell_value(mask))
            if out is None:
                break
            out.append(tuple(vals))
        self._keyvals[memo_key] = out
        return out

    def eval_bits(self, q: QueryAST) -> BitResult:
        if q in self._cache:
            return self._cache[q]
        result = self._eval(q)
        self._cache[q] = result
        return result

    def _eval(self, q: QueryAST) -> BitResult:
        if is_concrete(q):
            return self._lift_concrete(q)
        if isinstance(q, (Filter, Proj)):
            sub = self.eval_bits(q.source)
            if sub is None:
                return TOO_ABSTRACT
            if isinstance(q, Proj):
                return _BitTable(sub.rows, stable=False)
            return sub
        if isinstance(q, (Join, LeftJoin)):
            left = self.eval_bits(q.left)
            right = self.eval_bits(q.right)
            if left is None or right is None:
                return TOO_ABSTRACT
            cross = [l + r for l in left.rows for r in right.rows]
            if isinstance(q, LeftJoin):
                pad = (0,) * right.n_cols
                cross += [l + pad for l in left.rows]
            rows = _cap(cross)
            if rows is None:
                return TOO_ABSTRACT
            return _BitTable(rows, stable=left.stable and right.stable)
        if isinstance(q, Sort):
            # row order never affects consistency; passing rows through is exact
            return self.eval_bits(q.source)
        if isinstance(q, Group):
            return self._eval_group(q)
        if isinstance(q, Partition):
            return self._eval_partition(q)
        if isinstance(q, Arith):
            return self._eval_arith(q)
        raise AssertionError(q)

    # -- tiered rules ----------------------------------------------------

    def _tier(self, q: Union[Group, Partition], sub: _BitTable):
        """Classify as 'weak', 'medium' or ('strong', groups)."""
        keys = q.keys
        if (not isinstance(keys, tuple) or not sub.stable
                or (sub.rows and max(keys, default=0) > sub.n_cols)
                or not keys):
            return "weak", None
        key_vals = self._key_values(sub, keys)
        if key_vals is None:
            return "medium", None
        memo_key = (id(sub), keys)
        groups = self._groups.get(memo_key)
        if groups is None:
            groups = extract_groups(key_vals, range(1, len(keys) + 1))
            self._groups[memo_key] = groups
        return "strong", groups

    def _agg_columns(self, q: Union[Group, Partition], non_key: list[int],
                     n: int) -> list[int]:
        """Columns the aggregate can draw from, narrowed when the target is known."""
        if isinstance(q.target, int) and 1 <= q.target <= n:
            return [q.target]
        return non_key

    def _eval_group(self, q: Group) -> BitResult:
        sub = self.eval_bits(q.source)
        if sub is None:
            return TOO_ABSTRACT
        if not sub.rows:
            return _BitTable((), stable=False)
        tier, groups = self._tier(q, sub)
        n = sub.n_cols
        n_rows = len(sub.rows)
        if tier == "weak":
            col_union = [_union(r[c] for r in sub.rows) for c in range(n)]
            everything = _union(col_union)
            rows = _cap([tuple(col_union) + (everything,)] * n_rows)
            return _BitTable(rows, stable=False) if rows else TOO_ABSTRACT
        keys = q.keys
        non_key = [c for c in range(1, n + 1) if c not in keys]
        agg_cols = self._agg_columns(q, non_key, n)
        if tier == "medium":
            key_cells = tuple(_union(r[c - 1] for r in sub.rows) for c in keys)
            new = _union(r[c - 1] for r in sub.rows for c in agg_cols)
            rows = _cap([key_cells + (new,)] * n_rows)
            return _BitTable(rows, stable=True) if rows else TOO_ABSTRACT
        out = []
        for g in groups:
            key_cells = tuple(_union(sub.rows[k][c - 1] for k in g) for c in keys)
            new = _union(sub.rows[k][c - 1] for k in g for c in agg_cols)
            out.append(key_cells + (new,))
        rows = _cap(out)
        return _BitTable(rows, stable=True) if rows else TOO_ABSTRACT

    def _eval_partition(self, q: Partition) -> BitResult:
        sub = self.eval_bits(q.source)
        if sub is None:
            return TOO_ABSTRACT
        if not sub.rows:
            return _BitTable((), sub.stable)
        tier, groups = self._tier(q, sub)
        n = sub.n_cols
        if tier == "weak":
            everything = _union(c for r in sub.rows for c in r)
            rows = _cap([row + (everything,) for row in sub.rows])
            return _BitTable(rows, sub.stable) if rows else TOO_ABSTRACT
        keys = q.keys
        non_key = [c for c in range(1, n + 1) if c not in keys]
        agg_cols = self._agg_columns(q, non_key, n)
        if tier == "medium":
            new = _union(r[c - 1] for r in sub.rows for c in agg_cols)
            rows = _cap([row + (new,) for row in sub.rows])
            return _BitTable(rows, True) if rows else TOO_ABSTRACT
        group_new = {}
        for g in groups:
            new = _union(sub.rows[k][c - 1] for k in g for c in agg_cols)
            for k in g:
                group_new[k] = new
        rows = _cap([row + (group_new[i],) for i, row in enumerate(sub.rows)])
        return _BitTable(rows, True) if rows else TOO_ABSTRACT

    def _eval_arith(self, q: Arith) -> BitResult:
        sub = self.eval_bits(q.source)
        if sub is None:
            return TOO_ABSTRACT
        n = sub.n_cols
        cols: Sequence[int]
        if (isinstance(q.cols, tuple) and sub.stable
                and all(1 <= c <= n for c in q.cols)):
            cols = q.cols
        else:
            cols = range(1, n + 1)
        rows = _cap([row + (_union(row[c - 1] for c in cols),)
                     for row in sub.rows])
        return _BitTable(rows, sub.stable) if rows else TOO_ABSTRACT

    # -- consistency over bitmasks ----------------------------------------

    def demo_masks(self, demo: DemoGrid) -> list[list[int]]:
        return [[self.mask_of(cell) for cell in row]
                for row in demo_ref_grid(demo)]

    def consistent(self, bits: _BitTable, demo_masks: list[list[int]]) -> bool:
        """Injective row/col matching with ref-subset containment per cell."""
        rows = bits.rows
        m, n = len(demo_masks), len(demo_masks[0])
        if not rows or n > len(rows[0]) or m > len(rows):
            return False
        width = len(rows[0])
        col_cands = []
        for j in range(n):
            cands = [c for c in range(width)
                     if all(any(dm == dm & r[c] for r in rows)
                            for dm in (demo_masks[i][j] for i in range(m)))]
            if not cands:
                return False
            col_cands.append(cands)

        cmap: dict[int, int] = {}

        def try_cols(k: int) -> bool:
            if k == n:
                def ok(i, r):
                    return all(demo_masks[i][j] == demo_masks[i][j] & rows[r][cmap[j]]
                               for j in range(n))
                return _match_rows(m, len(rows), ok) is not None
            for c in col_cands[k]:
                if c not in cmap.values():
                    cmap[k] = c
                    if try_cols(k + 1):
                        return True
                    del cmap[k]
            return False

        return try_cols(0)


def eval_abs(q: QueryAST, inputs: dict[str, Table]) -> Optional[AbsTable]:
    """Abstract provenance of a (possibly partial) query; None = too abstract."""
    a = Abstractor(inputs)
    bits = a.eval_bits(q)
    if bits is None:
        return None
    return AbsTable(tuple(tuple(a.refset_of(m) for m in row)
                          for row in bits.rows))


# --- pruning oracles ----------------------------------------------------------

SAT, UNSAT = True, False


def prune_check(q: QueryAST, inputs: dict[str, Table], demo: DemoGrid,
                abstractor: Optional[Abstractor] = None,
                demo_masks: Optional[list[list[int]]] = None) -> bool:
    """SAT unless abstract provenance proves the demo unreachable from ``q``."""
    abstractor = abstractor or Abstractor(inputs)
    bits = abstractor.eval_bits(q)
    if bits is None:
        return SAT
    if demo_masks is None:
        demo_masks = abstractor.demo_masks(demo)
    return SAT if abstractor.consistent(bits, demo_masks) else UNSAT


# -- table-shape (type) abstraction -------------------------------------------

@dataclass(frozen=True)
class _Shape:
    rmin: int
    rmax: int
    cmin: int
    cmax: int


class ShapeAnalyzer:
    """Tracks reachable row/column counts (and exact group counts) of partial queries."""

    def __init__(self, inputs: dict[str, Table]):
        self.inputs = inputs
        self._cache: dict[QueryAST, _Shape] = {}

    def shape(self, q: QueryAST) -> _Shape:
        if q in self._cache:
            return self._cache[q]
        s = self._shape(q)
        self._cache[q] = s
        return s

    def _shape(self, q: QueryAST) -> _Shape:
        if is_concrete(q):
            t = eval_query(q, self.inputs)
            return _Shape(t.n_rows, t.n_rows, t.n_cols, t.n_cols)
        if isinstance(q, Filter):
            s = self.shape(q.source)
            return _Shape(0, s.rmax, s.cmin, s.cmax)
        if isinstance(q, (Join, LeftJoin)):
            a, b = self.shape(q.left), self.shape(q.right)
            rmax = a.rmax * b.rmax
            if isinstance(q, LeftJoin):
                rmax = max(rmax, a.rmax)
                rmin = a.rmin
            else:
                rmin = a.rmin * b.rmin
            return _Shape(rmin, rmax, a.cmin + b.cmin, a.cmax + b.cmax)
        if isinstance(q, Proj):
            s = self.shape(q.source)
            if isinstance(q.cols, tuple):
                return _Shape(s.rmin, s.rmax, len(q.cols), len(q.cols))
            return _Shape(s.rmin, s.rmax, 1, s.cmax)
        if isinstance(q, Sort):
            return self.shape(q.source)
        if isinstance(q, Group):
            s = self.shape(q.source)
            if isinstance(q.keys, tuple):
                if is_concrete(q.source) and max(q.keys, default=0) <= s.cmax:
                    t = eval_query(q.source, self.inputs)
                    g = len(extract_groups(t.rows, q.keys))
                    return _Shape(g, g, len(q.keys) + 1, len(q.keys) + 1)
                return _Shape(min(s.rmin, 1), s.rmax, len(q.keys) + 1, len(q.keys) + 1)
            return _Shape(min(s.rmin, 1), s.rmax, 2, s.cmax + 1)
        if isinstance(q, (Partition, Arith)):
            s = self.shape(q.source)
            return _Shape(s.rmin, s.rmax, s.cmin + 1, s.cmax + 1)
        raise AssertionError(q)


def prune_check_type(q: QueryAST, inputs: dict[str, Table], demo: DemoGrid,
                     analyzer: Optional[ShapeAnalyzer] = None) -> bool:
    """UNSAT when the demo shape is unreachable (row/column count bounds)."""
    analyzer = analyzer or ShapeAnalyzer(inputs)
    s = analyzer.shape(q)
    if s.rmax < demo.n_rows or s.cmax < demo.n_cols:
        return UNSAT
    return SAT


# -- known-value abstraction ---------------------------------------------------

class _Unknown:
    __slots__ = ()

    def __repr__(self) -> str:
        return "?"


UNKNOWN = _Unknown()


class ValueAnalyzer:
    """Tracks which concrete values are known to survive a partial query."""

    def __init__(self, inputs: dict[str, Table]):
        self.inputs = inputs
        self._cache: dict[QueryAST, Optional[list[tuple]]] = {}

    def value_rows(self, q: QueryAST) -> Optional[list[tuple]]:
        if q in self._cache:
            return self._cache[q]
        rows = self._rows(q)
        if rows is not None and len(rows) > ROW_CAP:
            rows = None
        self._cache[q] = rows
        return rows

    def _rows(self, q: QueryAST) -> Optional[list[tuple]]:
        if is_concrete(q):
            return [tuple(r) for r in eval_query(q, self.inputs).rows]
        if isinstance(q, (Filter, Proj, Sort)):
            return self.value_rows(q.source)
        if isinstance(q, (Join, LeftJoin)):
            left = self.value_rows(q.left)
            right = self.value_rows(q.right)
            if left is None or right is None:
                return None
            rows = [l + r for l in left for r in right]
            if isinstance(q, LeftJoin):
                width = len(right[0]) if right else 0
                rows += [l + (UNKNOWN,) * width for l in left]
            return rows
        if isinstance(q, (Group, Partition, Arith)):
            sub = self.value_rows(q.source)
            if sub is None:
                return None
            return [r + (UNKNOWN,) for r in sub]
        raise AssertionError(q)


def _demo_values(demo: DemoGrid, inputs: dict[str, Table]) -> list[list]:
    """Per-cell demo value, UNKNOWN when the cell has omitted arguments."""
    out = []
    for row in demo.cells:
        vals = []
        for cell in row:
            if _has_partial(cell):
                vals.append(UNKNOWN)
            else:
                vals.append(eval_expr(cell, inputs))
        out.append(vals)
    return out


def _has_partial(expr) -> bool:
    if isinstance(expr, App):
        return expr.partial or any(_has_partial(a) for a in expr.args)
    return False


def prune_check_value(q: QueryAST, inputs: dict[str, Table], demo: DemoGrid,
                      analyzer: Optional[ValueAnalyzer] = None) -> bool:
    """UNSAT when some fully-specified demo value provably cannot appear."""
    analyzer = analyzer or ValueAnalyzer(inputs)
    rows = analyzer.value_rows(q)
    if rows is None:
        return SAT
    demo_vals = _demo_values(demo, inputs)
    m, n = demo.n_rows, demo.n_cols
    if not rows or n > len(rows[0]) or m > len(rows):
        return UNSAT

    def compat(cell, dval) -> bool:
        if dval is UNKNOWN or cell is UNKNOWN:
            return True
        return values_equal(cell, dval)

    width = len(rows[0])
    col_cands = []
    for j in range(n):
        cands = [c for c in range(width)
                 if all(any(compat(r[c], demo_vals[i][j]) for r in rows)
                        for i in range(m))]
        if not cands:
            return UNSAT
        col_cands.append(cands)

    cmap: dict[int, int] = {}

    def try_cols(k: int) -> bool:
        if k == n:
            def ok(i, r):
                return all(compat(rows[r][cmap[j]], demo_vals[i][j]) for j in range(n))
            return _match_rows(m, len(rows), ok) is not None
        for c in col_cands[k]:
            if c not in cmap.values():
                cmap[k] = c
                if try_cols(k + 1):
                    return True
                del cmap[k]
        return False

    return SAT if try_cols(0) else UNSAT
