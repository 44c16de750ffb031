"""Analytical query IR with typed holes, plus structural utilities and SQL text emission.

Queries are immutable trees.  Parameter slots (grouping keys, aggregate
functions, predicates, ...) either hold a concrete binding or a ``Hole``.
Column indices are 1-based throughout, matching the cell-reference
convention.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from decimal import Decimal
from typing import Optional, Sequence, Union

from .exprs import AGG_FNS, ANA_FNS, ARITH_FNS, ExprError, _value_from_json, _value_to_json
from .tables import Value

CMP_OPS = ("<", "<=", "==", ">", ">=")

# hole slot kinds
COLUMNS, PREDICATE, AGG_FN, AGG_COL, ARITH_FN, ARITH_COLS, CMP_OP = (
    "columns", "predicate", "agg-fn", "agg-col", "arith-fn", "arith-cols", "cmp-op")


class QueryError(ValueError):
    """Structural error: bad hole id, kind mismatch, scoping violation."""


@dataclass(frozen=True)
class Hole:
    id: int
    kind: str


@dataclass(frozen=True)
class ColOperand:
    col: int


@dataclass(frozen=True)
class ConstOperand:
    value: Value


@dataclass(frozen=True)
class Atom:
    lhs: int
    op: str
    rhs: Union[ColOperand, ConstOperand]


@dataclass(frozen=True)
class Predicate:
    """Conjunction of comparison atoms; empty conjunction is ``true``."""

    atoms: tuple[Atom, ...] = ()
    literal_false: bool = False

    @staticmethod
    def true() -> "Predicate":
        return Predicate()

    @staticmethod
    def false() -> "Predicate":
        return Predicate((), True)


@dataclass(frozen=True)
class BaseTable:
    table: str


@dataclass(frozen=True)
class Filter:
    source: "QueryAST"
    pred: Union[Predicate, Hole]


@dataclass(frozen=True)
class Join:
    left: "QueryAST"
    right: "QueryAST"


@dataclass(frozen=True)
class LeftJoin:
    left: "QueryAST"
    right: "QueryAST"
    pred: Union[Predicate, Hole]


@dataclass(frozen=True)
class Proj:
    source: "QueryAST"
    cols: Union[tuple[int, ...], Hole]


@dataclass(frozen=True)
class Sort:
    source: "QueryAST"
    cols: Union[tuple[int, ...], Hole]
    op: Union[str, Hole]


@dataclass(frozen=True)
class Group:
    source: "QueryAST"
    keys: Union[tuple[int, ...], Hole]
    fn: Union[str, Hole]      # drawn from AGG_FNS
    target: Union[int, Hole]


@dataclass(frozen=True)
class Partition:
    source: "QueryAST"
    keys: Union[tuple[int, ...], Hole]
    fn: Union[str, Hole]      # drawn from ANA_FNS
    target: Union[int, Hole]


@dataclass(frozen=True)
class Arith:
    source: "QueryAST"
    fn: Union[str, Hole]      # drawn from ARITH_FNS
    cols: Union[tuple[int, ...], Hole]


QueryAST = Union[BaseTable, Filter, Join, LeftJoin, Proj, Sort, Group, Partition, Arith]

#: deterministic operator order used by skeleton enumeration
OPERATOR_ORDER = ("filter", "join", "left_join", "proj", "sort", "group",
                  "partition", "arithmetic")


def children(q: QueryAST) -> tuple[QueryAST, ...]:
    if isinstance(q, BaseTable):
        return ()
    if isinstance(q, (Join, LeftJoin)):
        return (q.left, q.right)
    return (q.source,)


def size(q: QueryAST) -> int:
    """Number of operator nodes, excluding base-table leaves."""
    own = 0 if isinstance(q, BaseTable) else 1
    return own + sum(size(c) for c in children(q))


def _own_holes(q: QueryAST) -> list[Hole]:
    """Hole slots of a single node, in instantiation order."""
    slots: list = []
    if isinstance(q, (Group, Partition)):
        slots = [q.keys, q.fn, q.target]
    elif isinstance(q, Arith):
        slots = [q.fn, q.cols]
    elif isinstance(q, Proj):
        slots = [q.cols]
    elif isinstance(q, Sort):
        slots = [q.cols, q.op]
    elif isinstance(q, Filter):
        slots = [q.pred]
    elif isinstance(q, LeftJoin):
        slots = [q.pred]
    return [s for s in slots if isinstance(s, Hole)]


def holes(q: QueryAST) -> list[Hole]:
    """All holes, innermost subquery first; within a node: keys, fn, target, predicate."""
    out: list[Hole] = []
    for c in children(q):
        out.extend(holes(c))
    out.extend(_own_holes(q))
    return out


def is_concrete(q: QueryAST) -> bool:
    return not holes(q)


def _check_kind(hole: Hole, expected: str, binding) -> None:
    if hole.kind != expected:
        raise QueryError(f"hole {hole.id} has kind {hole.kind!r}, slot wants {expected!r}")
    if expected == COLUMNS and not isinstance(binding, tuple):
        raise QueryError("columns binding must be a tuple")
    if expected == AGG_COL and not isinstance(binding, int):
        raise QueryError("target binding must be a column index")
    if expected in (AGG_FN, ARITH_FN) and not isinstance(binding, str):
        raise QueryError("function binding must be a name")
    if expected == ARITH_COLS and not isinstance(binding, tuple):
        raise QueryError("arith-cols binding must be a tuple")
    if expected == PREDICATE and not isinstance(binding, Predicate):
        raise QueryError("predicate binding must be a Predicate")
    if expected == CMP_OP and binding not in CMP_OPS:
        raise QueryError(f"bad comparison operator {binding!r}")


def substitute(q: QueryAST, hole_id: int, binding) -> QueryAST:
    """Return a copy of ``q`` with exactly the named hole filled."""
    new, n = _subst(q, hole_id, binding)
    if n == 0:
        raise QueryError(f"no hole with id {hole_id}")
    return new


def _subst(q: QueryAST, hole_id: int, binding) -> tuple[QueryAST, int]:
    hits = 0

    def fill(slot, expected):
        nonlocal hits
        if isinstance(slot, Hole) and slot.id == hole_id:
            _check_kind(slot, expected, binding)
            hits += 1
            return binding
        return slot

    if isinstance(q, BaseTable):
        return q, 0
    if isinstance(q, (Join, LeftJoin)):
        left, n1 = _subst(q.left, hole_id, binding)
        right, n2 = _subst(q.right, hole_id, binding)
        hits += n1 + n2
        if isinstance(q, Join):
            return Join(left, right), hits
        return LeftJoin(left, right, fill(q.pred, PREDICATE)), hits
    src, n = _subst(q.source, hole_id, binding)
    hits += n
    if isinstance(q, Filter):
        return Filter(src, fill(q.pred, PREDICATE)), hits
    if isinstance(q, Proj):
        return Proj(src, fill(q.cols, COLUMNS)), hits
    if isinstance(q, Sort):
        return Sort(src, fill(q.cols, COLUMNS), fill(q.op, CMP_OP)), hits
    if isinstance(q, Group):
        return Group(src, fill(q.keys, COLUMNS), fill(q.fn, AGG_FN),
                     fill(q.target, AGG_COL)), hits
    if isinstance(q, Partition):
        return Partition(src, fill(q.keys, COLUMNS), fill(q.fn, AGG_FN),
                         fill(q.target, AGG_COL)), hits
    return Arith(src, fill(q.fn, ARITH_FN), fill(q.cols, ARITH_COLS)), hits


# --- output column names (structural; independent of data) ------------------

def output_names(q: QueryAST,
                 base_names: Optional[dict[str, Sequence[str]]] = None
                 ) -> Optional[list[str]]:
    """Column names of the query result, or None when base names are unknown.

    Requires the parameters that determine arity (projection columns, group
    keys) to be concrete.
    """
    def name_of(names, i):
        if names is None:
            return f"c{i}"
        if not 1 <= i <= len(names):
            raise QueryError(f"column {i} out of range ({len(names)} columns)")
        return names[i - 1]

    if isinstance(q, BaseTable):
        if base_names and q.table in base_names:
            return list(base_names[q.table])
        return None
    if isinstance(q, (Filter, Sort)):
        return output_names(q.source, base_names)
    if isinstance(q, (Join, LeftJoin)):
        l = output_names(q.left, base_names)
        r = output_names(q.right, base_names)
        return None if l is None or r is None else l + r
    if isinstance(q, Proj):
        if isinstance(q.cols, Hole):
            raise QueryError("projection columns not instantiated")
        names = output_names(q.source, base_names)
        if names is None:
            return None
        if any(not 1 <= c <= len(names) for c in q.cols):
            raise QueryError(
                f"projection column out of range: {q.cols} over {len(names)}")
        return [names[c - 1] for c in q.cols]
    if isinstance(q, (Group, Partition)):
        if isinstance(q.keys, Hole):
            raise QueryError("keys not instantiated")
        names = output_names(q.source, base_names)
        fn = q.fn if isinstance(q.fn, str) else "agg"
        tgt = q.target if isinstance(q.target, int) else 0
        new = f"{fn}_{name_of(names, tgt)}" if tgt else fn
        if isinstance(q, Group):
            base = [name_of(names, c) for c in q.keys]
        else:
            base = names if names is not None else None
            if base is None:
                return None
        return (base + [new]) if base is not None or isinstance(q, Group) else None
    # Arith
    names = output_names(q.source, base_names)
    if names is None:
        return None
    fn = q.fn if isinstance(q.fn, str) else "fn"
    cols = q.cols if isinstance(q.cols, tuple) else ()
    new = fn + ("_" + "_".join(name_of(names, c) for c in cols) if cols else "")
    return names + [new]


def output_arity(q: QueryAST, base_arity: dict[str, int]) -> int:
    """Output column count; arity-determining parameters must be concrete."""
    if isinstance(q, BaseTable):
        return base_arity[q.table]
    if isinstance(q, (Filter, Sort)):
        return output_arity(q.source, base_arity)
    if isinstance(q, (Join, LeftJoin)):
        return output_arity(q.left, base_arity) + output_arity(q.right, base_arity)
    if isinstance(q, Proj):
        if isinstance(q.cols, Hole):
            raise QueryError("projection columns not instantiated")
        return len(q.cols)
    if isinstance(q, Group):
        if isinstance(q.keys, Hole):
            raise QueryError("group keys not instantiated")
        return len(q.keys) + 1
    return output_arity(q.source, base_arity) + 1


# --- SQL emission ------------------------------------------------------------

def _sql_value(v: Value) -> str:
    if v is None:
        return "Null"
    if isinstance(v, Decimal):
        return format(v.normalize(), "f")
    return "'" + str(v).replace("'", "''") + "'"


_SQL_OPS = {"<": "<", "<=": "<=", "==": "=", ">": ">", ">=": ">="}


def _sql_pred(pred: Predicate, names: Optional[list[str]]) -> str:
    def name(i):
        return names[i - 1] if names else f"c{i}"

    if pred.literal_false:
        return "False"
    if not pred.atoms:
        return "True"
    parts = []
    for a in pred.atoms:
        rhs = (name(a.rhs.col) if isinstance(a.rhs, ColOperand)
               else _sql_value(a.rhs.value))
        parts.append(f"{name(a.lhs)} {_SQL_OPS[a.op]} {rhs}")
    return " And ".join(parts)


def to_sql(q: QueryAST,
           base_names: Optional[dict[str, Sequence[str]]] = None) -> str:
    """Render a concrete query as nested-subquery SQL text.

    The text is advisory output for the user and is never re-parsed.  When
    base-table column names are unknown, columns render positionally as
    ``c1..cn``.
    """
    if not is_concrete(q):
        raise QueryError("cannot render a partial query as SQL")
    counter = [0]

    def alias() -> str:
        counter[0] += 1
        return f"s{counter[0]}"

    def name(names, i):
        return names[i - 1] if names else f"c{i}"

    def arith_sql(fn: str, a: str, b: str) -> str:
        return {
            "add": f"({a} + {b})",
            "sub": f"({a} - {b})",
            "mul": f"({a} * {b})",
            "div": f"({a} / {b})",
            "percent_of": f"({a} / {b} * 100)",
        }[fn]

    def new_col_name(node: QueryAST) -> str:
        names = output_names_or_none(node)
        return names[-1] if names else "v"

    def render(node: QueryAST) -> str:
        if isinstance(node, BaseTable):
            return f"Select * From {node.table}"
        if isinstance(node, Filter):
            src = render(node.source)
            return (f"Select * From ({src}) {alias()} "
                    f"Where {_sql_pred(node.pred, output_names_or_none(node.source))}")
        if isinstance(node, Join):
            return (f"Select * From ({render(node.left)}) {alias()}, "
                    f"({render(node.right)}) {alias()}")
        if isinstance(node, LeftJoin):
            combined = output_names_or_none(node)
            return (f"Select * From ({render(node.left)}) {alias()} "
                    f"Left Join ({render(node.right)}) {alias()} "
                    f"On {_sql_pred(node.pred, combined)}")
        if isinstance(node, Proj):
            src_names = output_names_or_none(node.source)
            cols = ", ".join(name(src_names, c) for c in node.cols)
            return f"Select {cols} From ({render(node.source)}) {alias()}"
        if isinstance(node, Sort):
            src_names = output_names_or_none(node.source)
            order = "Asc" if node.op in ("<", "<=") else "Desc"
            cols = ", ".join(f"{name(src_names, c)} {order}" for c in node.cols)
            return f"Select * From ({render(node.source)}) {alias()} Order By {cols}"
        if isinstance(node, Group):
            src_names = output_names_or_none(node.source)
            keys = ", ".join(name(src_names, c) for c in node.keys)
            agg = f"{node.fn.capitalize()}({name(src_names, node.target)})"
            return (f"Select {keys}, {agg} As {new_col_name(node)} "
                    f"From ({render(node.source)}) {alias()} Group By {keys}")
        if isinstance(node, Partition):
            src_names = output_names_or_none(node.source)
            keys = ", ".join(name(src_names, c) for c in node.keys)
            over = f"Partition By {keys}"
            tgt = name(src_names, node.target)
            if node.fn in ("rank", "dense_rank"):
                over += f" Order By {tgt} Desc"
            elif node.fn == "cumsum":
                if isinstance(node.source, Sort):
                    sort_names = output_names_or_none(node.source.source)
                    order = "Asc" if node.source.op in ("<", "<=") else "Desc"
                    by = ", ".join(f"{name(sort_names, c)} {order}"
                                   for c in node.source.cols)
                    over += f" Order By {by}"
                over += " Rows Between Unbounded Preceding And Current Row"
            fn_name = {"cumsum": "Sum", "dense_rank": "Dense_Rank"}.get(
                node.fn, node.fn.capitalize())
            win_arg = "" if node.fn in ("rank", "dense_rank") else tgt
            return (f"Select *, {fn_name}({win_arg}) Over ({over}) As {new_col_name(node)} "
                    f"From ({render(node.source)}) {alias()}")
        # Arith
        src_names = output_names_or_none(node.source)
        a, b = (name(src_names, c) for c in node.cols)
        expr = arith_sql(node.fn, a, b)
        return f"Select *, {expr} As {new_col_name(node)} From ({render(node.source)}) {alias()}"

    def output_names_or_none(node: QueryAST) -> Optional[list[str]]:
        try:
            return output_names(node, base_names)
        except QueryError:
            return None

    return render(q)


# --- JSON (de)serialization ---------------------------------------------------

def pred_to_json(pred: Predicate) -> dict:
    if pred.literal_false:
        return {"false": True}
    atoms = []
    for a in pred.atoms:
        if isinstance(a.rhs, ColOperand):
            rhs = {"kind": "col", "col": a.rhs.col}
        else:
            rhs = {"kind": "const", "value": _value_to_json(a.rhs.value)}
        atoms.append({"lhs": a.lhs, "op": a.op, "rhs": rhs})
    return {"atoms": atoms}


def pred_from_json(obj: dict) -> Predicate:
    if obj.get("false"):
        return Predicate.false()
    atoms = []
    for a in obj.get("atoms", []):
        rhs = a["rhs"]
        if rhs.get("kind") == "col":
            operand: Union[ColOperand, ConstOperand] = ColOperand(int(rhs["col"]))
        else:
            operand = ConstOperand(_value_from_json(rhs.get("value")))
        if a["op"] not in CMP_OPS:
            raise QueryError(f"bad comparison operator {a['op']!r}")
        atoms.append(Atom(int(a["lhs"]), a["op"], operand))
    return Predicate(tuple(atoms))


def query_to_json(q: QueryAST) -> dict:
    if not is_concrete(q):
        raise QueryError("cannot serialize a partial query")
    if isinstance(q, BaseTable):
        return {"op": "table", "id": q.table}
    if isinstance(q, Filter):
        return {"op": "filter", "source": query_to_json(q.source),
                "pred": pred_to_json(q.pred)}
    if isinstance(q, Join):
        return {"op": "join", "left": query_to_json(q.left),
                "right": query_to_json(q.right)}
    if isinstance(q, LeftJoin):
        return {"op": "left_join", "left": query_to_json(q.left),
                "right": query_to_json(q.right), "pred": pred_to_json(q.pred)}
    if isinstance(q, Proj):
        return {"op": "proj", "source": query_to_json(q.source),
                "cols": list(q.cols)}
    if isinstance(q, Sort):
        return {"op": "sort", "source": query_to_json(q.source),
                "cols": list(q.cols), "cmp": q.op}
    if isinstance(q, Group):
        return {"op": "group", "source": query_to_json(q.source),
                "keys": list(q.keys), "fn": q.fn, "target": q.target}
    if isinstance(q, Partition):
        return {"op": "partition", "source": query_to_json(q.source),
                "keys": list(q.keys), "fn": q.fn, "target": q.target}
    return {"op": "arithmetic", "source": query_to_json(q.source),
            "fn": q.fn, "cols": list(q.cols)}


def query_from_json(obj: dict) -> QueryAST:
    if not isinstance(obj, dict) or "op" not in obj:
        raise QueryError(f"bad query object: {obj!r}")
    op = obj["op"]
    try:
        if op == "table":
            return BaseTable(str(obj["id"]))
        if op == "filter":
            return Filter(query_from_json(obj["source"]), pred_from_json(obj["pred"]))
        if op == "join":
            return Join(query_from_json(obj["left"]), query_from_json(obj["right"]))
        if op == "left_join":
            return LeftJoin(query_from_json(obj["left"]), query_from_json(obj["right"]),
                            pred_from_json(obj["pred"]))
        if op == "proj":
            return Proj(query_from_json(obj["source"]), tuple(int(c) for c in obj["cols"]))
        if op == "sort":
            cmp = obj["cmp"]
            if cmp not in CMP_OPS:
                raise QueryError(f"bad comparison operator {cmp!r}")
            return Sort(query_from_json(obj["source"]),
                        tuple(int(c) for c in obj["cols"]), cmp)
        if op == "group":
            fn = str(obj["fn"])
            if fn not in AGG_FNS:
                raise QueryError(f"bad aggregate {fn!r}")
            return Group(query_from_json(obj["source"]),
                         tuple(int(c) for c in obj["keys"]), fn, int(obj["target"]))
        if op == "partition":
            fn = str(obj["fn"])
            if fn not in ANA_FNS:
                raise QueryError(f"bad analytical function {fn!r}")
            return Partition(query_from_json(obj["source"]),
                             tuple(int(c) for c in obj["keys"]), fn, int(obj["target"]))
        if op == "arithmetic":
            fn = str(obj["fn"])
            if fn not in ARITH_FNS:
                raise QueryError(f"bad arithmetic function {fn!r}")
            return Arith(query_from_json(obj["source"]), fn,
                         tuple(int(c) for c in obj["cols"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, QueryError):
            raise
        raise QueryError(f"malformed query JSON: {obj!r}") from exc
    raise QueryError(f"unknown operator {op!r}")
