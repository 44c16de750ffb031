"""Concrete and provenance-tracking evaluation of concrete queries.

Both evaluators share row-order conventions: filter, sort, partition and
arithmetic preserve incoming row order; group emits one row per group in
first-appearance order; joins emit nested-loop order.

The two evaluators are deliberately independent implementations.  Cellwise
evaluation of the provenance output must reproduce the concrete output; the
test suite checks that equivalence on randomized queries.
"""
from __future__ import annotations

from decimal import Decimal
from typing import Sequence, Union

from .exprs import (App, Const, Expr, ExprError, GroupSet, ProvTable, Ref,
                    apply_fn, eval_expr, simplify)
from .queries import (Arith, Atom, BaseTable, ColOperand, Filter, Group, Join,
                      LeftJoin, Partition, Predicate, Proj, QueryAST,
                      QueryError, Sort, is_concrete, output_names)
from .tables import CellRef, Table, Value, values_equal


def _key(v: Value):
    """Hashable grouping key; numerically equal Decimals collide."""
    return ("n", v) if isinstance(v, Decimal) else ("s", v) if isinstance(v, str) else ("_",)


def extract_groups(rows: Sequence[Sequence[Value]],
                   keys: Sequence[int]) -> list[list[int]]:
    """Partition 0-based row indices into equivalence classes on the key columns.

    Groups appear in order of first appearance; within a group, row order is
    preserved.
    """
    order: dict[tuple, list[int]] = {}
    for i, row in enumerate(rows):
        k = tuple(_key(row[c - 1]) for c in keys)
        order.setdefault(k, []).append(i)
    return list(order.values())


def _cmp(a: Value, b: Value, op: str) -> bool:
    if op == "==":
        return values_equal(a, b)
    if a is None or b is None:
        return False
    if isinstance(a, Decimal) != isinstance(b, Decimal):
        return False
    table = {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}
    return table[op]


def eval_pred(pred: Predicate, row: Sequence[Value]) -> bool:
    if pred.literal_false:
        return False
    for atom in pred.atoms:
        lhs = row[atom.lhs - 1]
        rhs = (row[atom.rhs.col - 1] if isinstance(atom.rhs, ColOperand)
               else atom.rhs.value)
        if not _cmp(lhs, rhs, atom.op):
            return False
    return True


def _check_scope(cols: Sequence[int], arity: int, what: str) -> None:
    for c in cols:
        if not (1 <= c <= arity):
            raise QueryError(f"{what} column {c} out of range 1..{arity}")


def _pred_cols(pred: Predicate) -> list[int]:
    out = []
    for a in pred.atoms:
        out.append(a.lhs)
        if isinstance(a.rhs, ColOperand):
            out.append(a.rhs.col)
    return out


def _sort_rows(indexed: list, key_cells: list, op: str) -> list:
    """Stable sort of row payloads by pre-evaluated key tuples."""
    def sort_key(pair):
        cells = pair[1]
        return tuple(
            (0, "", float(v)) if isinstance(v, Decimal)
            else (1, v, 0.0) if isinstance(v, str) else (2, "", 0.0)
            for v in cells)

    reverse = op in (">", ">=")
    paired = sorted(zip(indexed, key_cells), key=sort_key, reverse=reverse)
    return [p[0] for p in paired]


def eval_query(q: QueryAST, inputs: dict[str, Table]) -> Table:
    """Standard relational evaluation of a concrete query."""
    if not is_concrete(q):
        raise QueryError("cannot evaluate a partial query")
    names = output_names(q, {t.id: t.column_names for t in inputs.values()})
    rows = _eval_rows(q, inputs)
    return Table.make("out", rows, names)


def _eval_rows(q: QueryAST, inputs: dict[str, Table]) -> list[tuple[Value, ...]]:
    if isinstance(q, BaseTable):
        t = inputs.get(q.table)
        if t is None:
            raise QueryError(f"unknown input table {q.table!r}")
        return [tuple(r) for r in t.rows]
    if isinstance(q, Filter):
        rows = _eval_rows(q.source, inputs)
        if rows:
            _check_scope(_pred_cols(q.pred), len(rows[0]), "predicate")
        return [r for r in rows if eval_pred(q.pred, r)]
    if isinstance(q, Join):
        left = _eval_rows(q.left, inputs)
        right = _eval_rows(q.right, inputs)
        return [l + r for l in left for r in right]
    if isinstance(q, LeftJoin):
        left = _eval_rows(q.left, inputs)
        right = _eval_rows(q.right, inputs)
        width = len(right[0]) if right else 0
        out = []
        for l in left:
            matched = [l + r for r in right if eval_pred(q.pred, l + r)]
            out.extend(matched if matched else [l + (None,) * width])
        return out
    if isinstance(q, Proj):
        rows = _eval_rows(q.source, inputs)
        if rows:
            _check_scope(q.cols, len(rows[0]), "projection")
        return [tuple(r[c - 1] for c in q.cols) for r in rows]
    if isinstance(q, Sort):
        rows = _eval_rows(q.source, inputs)
        if rows:
            _check_scope(q.cols, len(rows[0]), "sort")
        keys = [tuple(r[c - 1] for c in q.cols) for r in rows]
        return _sort_rows(rows, keys, q.op)
    if isinstance(q, Group):
        rows = _eval_rows(q.source, inputs)
        if rows:
            _check_scope(list(q.keys) + [q.target], len(rows[0]), "group")
        out = []
        for g in extract_groups(rows, q.keys):
            key_vals = tuple(rows[g[0]][c - 1] for c in q.keys)
            agg = apply_fn(q.fn, [rows[i][q.target - 1] for i in g])
            out.append(key_vals + (agg,))
        return out
    if isinstance(q, Partition):
        rows = _eval_rows(q.source, inputs)
        if rows:
            _check_scope(list(q.keys) + [q.target], len(rows[0]), "partition")
        new: dict[int, Value] = {}
        for g in extract_groups(rows, q.keys):
            vals = [rows[i][q.target - 1] for i in g]
            for pos, i in enumerate(g):
                if q.fn == "cumsum":
                    new[i] = apply_fn("sum", vals[:pos + 1])
                elif q.fn in ("rank", "dense_rank"):
                    new[i] = apply_fn(q.fn, [vals[pos]] + vals)
                else:
                    new[i] = apply_fn(q.fn, vals)
        return [r + (new[i],) for i, r in enumerate(rows)]
    if isinstance(q, Arith):
        rows = _eval_rows(q.source, inputs)
        if rows:
            _check_scope(q.cols, len(rows[0]), "arithmetic")
        return [r + (apply_fn(q.fn, [r[c - 1] for c in q.cols]),) for r in rows]
    raise QueryError(f"unknown query node {q!r}")


# --- provenance-tracking evaluation ------------------------------------------

def _agg_expr(fn: str, cells: Sequence[Expr]) -> Expr:
    return simplify(App(fn, tuple(cells)))


def _window_expr(fn: str, cells: Sequence[Expr], pos: int) -> Expr:
    """Provenance of an analytical value at position ``pos`` in its group.

    cumsum rewrites to a plain sum over the group prefix so that nested sums
    flatten across operators; ranking functions carry the row's own cell as
    the probe followed by the whole group.
    """
    if fn == "cumsum":
        return _agg_expr("sum", cells[:pos + 1])
    if fn in ("rank", "dense_rank"):
        return simplify(App(fn, (cells[pos],) + tuple(cells)))
    return _agg_expr(fn, cells)


def _arith_expr(fn: str, args: Sequence[Expr]) -> Expr:
    """Expand an arithmetic template into primitive operations."""
    if fn == "percent_of":
        a, b = args
        return simplify(App("mul", (App("div", (a, b)), Const(Decimal(100)))))
    return simplify(App(fn, tuple(args)))


def eval_prov(q: QueryAST, inputs: dict[str, Table]) -> ProvTable:
    """Provenance-tracking evaluation: one expression tree per output cell."""
    if not is_concrete(q):
        raise QueryError("cannot evaluate a partial query")
    names = output_names(q, {t.id: t.column_names for t in inputs.values()})
    cells = _prov_rows(q, inputs)
    width = len(cells[0]) if cells else (len(names) if names else 0)
    if names is None or len(names) != width:
        names = [f"c{i + 1}" for i in range(width)]
    return ProvTable(tuple(names), tuple(tuple(r) for r in cells))


def _cell_values(rows: list[list[Expr]], inputs: dict[str, Table],
                 cols: Sequence[int]) -> list[tuple[Value, ...]]:
    return [tuple(eval_expr(r[c - 1], inputs) for c in cols) for r in rows]


def _prov_rows(q: QueryAST, inputs: dict[str, Table]) -> list[list[Expr]]:
    if isinstance(q, BaseTable):
        t = inputs.get(q.table)
        if t is None:
            raise QueryError(f"unknown input table {q.table!r}")
        return [[Ref(CellRef(t.id, i + 1, j + 1)) for j in range(t.n_cols)]
                for i in range(t.n_rows)]
    if isinstance(q, Filter):
        rows = _prov_rows(q.source, inputs)
        if rows:
            _check_scope(_pred_cols(q.pred), len(rows[0]), "predicate")
        return [r for r in rows
                if eval_pred(q.pred, [eval_expr(e, inputs) for e in r])]
    if isinstance(q, Join):
        left = _prov_rows(q.left, inputs)
        right = _prov_rows(q.right, inputs)
        return [l + r for l in left for r in right]
    if isinstance(q, LeftJoin):
        left = _prov_rows(q.left, inputs)
        right = _prov_rows(q.right, inputs)
        width = len(right[0]) if right else 0
        out = []
        for l in left:
            matched = []
            lvals = [eval_expr(e, inputs) for e in l]
            for r in right:
                vals = lvals + [eval_expr(e, inputs) for e in r]
                if eval_pred(q.pred, vals):
                    matched.append(l + r)
            out.extend(matched if matched else [l + [Const(None)] * width])
        return out
    if isinstance(q, Proj):
        rows = _prov_rows(q.source, inputs)
        if rows:
            _check_scope(q.cols, len(rows[0]), "projection")
        return [[r[c - 1] for c in q.cols] for r in rows]
    if isinstance(q, Sort):
        rows = _prov_rows(q.source, inputs)
        if rows:
            _check_scope(q.cols, len(rows[0]), "sort")
        return _sort_rows(rows, _cell_values(rows, inputs, q.cols), q.op)
    if isinstance(q, Group):
        rows = _prov_rows(q.source, inputs)
        if rows:
            _check_scope(list(q.keys) + [q.target], len(rows[0]), "group")
        groups = extract_groups(_cell_values(rows, inputs, range(1, len(rows[0]) + 1))
                                if rows else [], q.keys)
        out = []
        for g in groups:
            key_cells = [GroupSet(tuple(rows[k][c - 1] for k in g)) for c in q.keys]
            agg = _agg_expr(q.fn, [rows[k][q.target - 1] for k in g])
            out.append(key_cells + [agg])
        return out
    if isinstance(q, Partition):
        rows = _prov_rows(q.source, inputs)
        if rows:
            _check_scope(list(q.keys) + [q.target], len(rows[0]), "partition")
        groups = extract_groups(_cell_values(rows, inputs, range(1, len(rows[0]) + 1))
                                if rows else [], q.keys)
        new: dict[int, Expr] = {}
        for g in groups:
            cells = [rows[k][q.target - 1] for k in g]
            for pos, i in enumerate(g):
                new[i] = _window_expr(q.fn, cells, pos)
        return [r + [new[i]] for i, r in enumerate(rows)]
    if isinstance(q, Arith):
        rows = _prov_rows(q.source, inputs)
        if rows:
            _check_scope(q.cols, len(rows[0]), "arithmetic")
        return [r + [_arith_expr(q.fn, [r[c - 1] for c in q.cols])] for r in rows]
    raise QueryError(f"unknown query node {q!r}")


def eval_prov_table(prov: ProvTable, inputs: dict[str, Table]) -> Table:
    """Cellwise evaluation of a provenance table into a concrete table."""
    rows = [tuple(eval_expr(c, inputs) for c in row) for row in prov.cells]
    return Table.make("out", rows, prov.column_names)
