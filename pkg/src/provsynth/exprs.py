"""Cell-level expression trees.

Two expression families share one node algebra:

* provenance expressions (output of provenance-tracking evaluation) may
  contain ``GroupSet`` nodes and never carry an omission marker;
* demonstration expressions may mark an application as *partial* (the user
  omitted some arguments) and never contain ``GroupSet``.
"""
from __future__ import annotations

import functools
import json
from dataclasses import dataclass
from decimal import Decimal
from typing import Optional, Union

from .tables import CellRef, Table, TableError, Value, values_equal

# Closed function vocabulary.
AGG_FNS = ("sum", "avg", "max", "min", "count")
ANA_FNS = AGG_FNS + ("dense_rank", "rank", "cumsum")
ARITH_FNS = ("add", "sub", "mul", "div", "percent_of")
ALL_FNS = tuple(dict.fromkeys(AGG_FNS + ANA_FNS + ARITH_FNS))

#: nested applications of these flatten: f(f(a,b),c) == f(a,b,c)
FLATTENABLE = frozenset({"sum", "max", "min"})
#: argument order is irrelevant for these
COMMUTATIVE = frozenset({"sum", "avg", "max", "min", "count", "add", "mul"})


@dataclass(frozen=True)
class Const:
    value: Value


@dataclass(frozen=True)
class Ref:
    cell: CellRef


@dataclass(frozen=True)
class App:
    fn: str
    args: tuple["Expr", ...]
    partial: bool = False

    def __post_init__(self) -> None:
        if self.fn not in ALL_FNS:
            raise ExprError(f"unknown function {self.fn!r}")
        if self.partial and not self.args:
            raise ExprError("partial application needs at least one argument")


@dataclass(frozen=True)
class GroupSet:
    """Cell produced by the group operator; members are value-equal."""

    members: tuple["Expr", ...]


Expr = Union[Const, Ref, App, GroupSet]
ProvExpr = Expr
DemoExpr = Expr  # no GroupSet, may use App(partial=True)


class ExprError(ValueError):
    """Bad expression: unknown function, arity/type mismatch, bad ref."""


@functools.lru_cache(maxsize=None)
def refs(expr: Expr) -> frozenset[CellRef]:
    """All input-cell references occurring in ``expr``."""
    if isinstance(expr, Const):
        return frozenset()
    if isinstance(expr, Ref):
        return frozenset({expr.cell})
    if isinstance(expr, App):
        return frozenset().union(*(refs(a) for a in expr.args))
    return frozenset().union(*(refs(m) for m in expr.members))


def simplify(expr: Expr) -> Expr:
    """Flatten nested applications of flattenable aggregates, bottom-up."""
    if isinstance(expr, App):
        args = tuple(simplify(a) for a in expr.args)
        partial = expr.partial
        if expr.fn in FLATTENABLE:
            flat: list[Expr] = []
            for a in args:
                if isinstance(a, App) and a.fn == expr.fn:
                    # A partial inner application simply hides some of the
                    # parent's arguments, so absorb the flag on flattening.
                    flat.extend(a.args)
                    partial = partial or a.partial
                else:
                    flat.append(a)
            args = tuple(flat)
        return App(expr.fn, args, partial)
    if isinstance(expr, GroupSet):
        return GroupSet(tuple(simplify(m) for m in expr.members))
    return expr


def _num(v: Value) -> Decimal:
    if not isinstance(v, Decimal):
        raise ExprError(f"expected a number, got {v!r}")
    return v


def apply_fn(fn: str, values: list[Value]) -> Value:
    """Evaluate one function application over already-evaluated arguments.

    Aggregates skip Nulls (SQL-style); an empty sum is 0, empty avg/max/min
    are Null.  ``rank``/``dense_rank`` treat the first argument as the probe
    and the rest as the full group, ranking descending with shared ties.
    """
    if fn in ("sum", "avg", "max", "min", "count", "cumsum"):
        present = [v for v in values if v is not None]
        if fn == "count":
            return Decimal(len(present))
        if not present:
            return Decimal(0) if fn in ("sum", "cumsum") else None
        nums = [_num(v) for v in present]
        if fn in ("sum", "cumsum"):
            return sum(nums, Decimal(0))
        if fn == "avg":
            return sum(nums, Decimal(0)) / Decimal(len(nums))
        return max(nums) if fn == "max" else min(nums)
    if fn in ("rank", "dense_rank"):
        if not values:
            raise ExprError(f"{fn} needs a probe argument")
        probe = _num(values[0])
        pool = [_num(v) for v in values[1:] if v is not None]
        above = [v for v in pool if v > probe]
        if fn == "rank":
            return Decimal(1 + len(above))
        return Decimal(1 + len({str(v.normalize()) for v in above}))
    # binary arithmetic
    if len(values) != 2:
        raise ExprError(f"{fn} expects 2 arguments, got {len(values)}")
    a, b = values
    if a is None or b is None:
        return None
    a, b = _num(a), _num(b)
    if fn == "add":
        return a + b
    if fn == "sub":
        return a - b
    if fn == "mul":
        return a * b
    if fn == "div":
        return None if b == 0 else a / b
    if fn == "percent_of":
        return None if b == 0 else a / b * Decimal(100)
    raise ExprError(f"unknown function {fn!r}")


def eval_expr(expr: Expr, inputs: dict[str, Table]) -> Value:
    """Evaluate an expression against the input tables."""
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Ref):
        t = inputs.get(expr.cell.table)
        if t is None:
            raise TableError(f"unknown table {expr.cell.table!r}")
        return t.cell(expr.cell.row, expr.cell.col)
    if isinstance(expr, App):
        if expr.partial:
            raise ExprError("cannot evaluate a partial application")
        return apply_fn(expr.fn, [eval_expr(a, inputs) for a in expr.args])
    if not expr.members:
        raise ExprError("empty group cell")
    vals = [eval_expr(m, inputs) for m in expr.members]
    for v in vals[1:]:
        if not values_equal(vals[0], v):
            raise ExprError(f"group members disagree: {vals!r}")
    return vals[0]


def format_expr(expr: Expr) -> str:
    if isinstance(expr, Const):
        if isinstance(expr.value, Decimal):
            return format(expr.value.normalize(), "f")
        return json.dumps(expr.value)
    if isinstance(expr, Ref):
        return str(expr.cell)
    if isinstance(expr, App):
        inner = ",".join(format_expr(a) for a in expr.args)
        if expr.partial:
            inner += ",..." if inner else "..."
        return f"{expr.fn}({inner})"
    return "group{" + ",".join(format_expr(m) for m in expr.members) + "}"


@dataclass(frozen=True)
class DemoGrid:
    """The user demonstration: a rectangular grid of demo expressions."""

    column_names: Optional[tuple[str, ...]]
    cells: tuple[tuple[DemoExpr, ...], ...]

    def __post_init__(self) -> None:
        if not self.cells or not self.cells[0]:
            raise ExprError("demonstration must have at least one cell")
        width = len(self.cells[0])
        for row in self.cells:
            if len(row) != width:
                raise ExprError("demonstration grid must be rectangular")
        for row in self.cells:
            for cell in row:
                _check_demo_expr(cell)

    @property
    def n_rows(self) -> int:
        return len(self.cells)

    @property
    def n_cols(self) -> int:
        return len(self.cells[0])


def _check_demo_expr(expr: Expr) -> None:
    if isinstance(expr, GroupSet):
        raise ExprError("demonstration cells cannot contain group nodes")
    if isinstance(expr, App):
        for a in expr.args:
            _check_demo_expr(a)


@dataclass(frozen=True)
class ProvTable:
    """Grid of provenance expressions produced by provenance evaluation."""

    column_names: tuple[str, ...]
    cells: tuple[tuple[ProvExpr, ...], ...]

    @property
    def n_rows(self) -> int:
        return len(self.cells)

    @property
    def n_cols(self) -> int:
        return len(self.column_names)


# --- JSON (de)serialization of demonstrations -------------------------------

def _value_to_json(v: Value):
    if isinstance(v, Decimal):
        i = int(v)
        return i if v == i else float(v)
    return v


def _value_from_json(v) -> Value:
    if isinstance(v, bool):
        raise ExprError("boolean constants are not supported")
    if isinstance(v, (int, float)):
        return Decimal(str(v))
    if v is None or isinstance(v, str):
        return v
    raise ExprError(f"bad constant {v!r}")


def expr_to_json(expr: Expr) -> dict:
    if isinstance(expr, Const):
        return {"kind": "const", "value": _value_to_json(expr.value)}
    if isinstance(expr, Ref):
        return {"kind": "ref", "table": expr.cell.table,
                "row": expr.cell.row, "col": expr.cell.col}
    if isinstance(expr, App):
        return {"kind": "app", "fn": expr.fn,
                "args": [expr_to_json(a) for a in expr.args],
                "partial": expr.partial}
    return {"kind": "group", "members": [expr_to_json(m) for m in expr.members]}


def expr_from_json(obj: dict, allow_group: bool = False) -> Expr:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ExprError(f"bad expression object: {obj!r}")
    kind = obj["kind"]
    if kind == "const":
        return Const(_value_from_json(obj.get("value")))
    if kind == "ref":
        try:
            return Ref(CellRef(str(obj["table"]), int(obj["row"]), int(obj["col"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ExprError(f"bad ref: {obj!r}") from exc
    if kind == "app":
        args = tuple(expr_from_json(a, allow_group) for a in obj.get("args", []))
        return App(str(obj.get("fn")), args, bool(obj.get("partial", False)))
    if kind == "group" and allow_group:
        return GroupSet(tuple(expr_from_json(m, True) for m in obj["members"]))
    raise ExprError(f"unknown expression kind {kind!r}")


def demo_to_json(demo: DemoGrid) -> dict:
    return {
        "columns": list(demo.column_names) if demo.column_names else None,
        "rows": [[expr_to_json(c) for c in row] for row in demo.cells],
    }


def demo_from_json(obj: dict) -> DemoGrid:
    if not isinstance(obj, dict) or "rows" not in obj:
        raise ExprError("demonstration JSON must have a 'rows' field")
    columns = obj.get("columns")
    cells = tuple(tuple(expr_from_json(c) for c in row) for row in obj["rows"])
    return DemoGrid(tuple(columns) if columns else None, cells)


def parse_demo(text: str) -> DemoGrid:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ExprError(f"malformed demonstration JSON: {exc}") from exc
    return demo_from_json(obj)


def write_demo(demo: DemoGrid) -> str:
    return json.dumps(demo_to_json(demo), indent=2)


def check_demo_refs(demo: DemoGrid, inputs: dict[str, Table]) -> None:
    """Raise TableError unless every demo ref resolves against the inputs."""
    for row in demo.cells:
        for cell in row:
            for r in refs(cell):
                t = inputs.get(r.table)
                if t is None:
                    raise TableError(f"demo references unknown table {r.table!r}")
                t.cell(r.row, r.col)
