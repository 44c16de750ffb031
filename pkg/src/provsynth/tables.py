"""Core table model: scalar values, tables, and references to input cells.

Values are plain Python objects: ``str`` for text, ``decimal.Decimal`` for
numbers, and ``None`` for missing cells.  Numbers compare with an absolute
tolerance so that derived quantities (averages, percentages) survive
round-tripping through text formats.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Iterable, Optional, Sequence, Union

Value = Union[str, Decimal, None]

#: absolute tolerance for numeric comparison
EPSILON = Decimal("1e-9")


def parse_value(text: str) -> Value:
    """Parse one CSV cell: empty -> None, numeric -> Decimal, else text."""
    text = text.strip()
    if text == "":
        return None
    try:
        return Decimal(text)
    except InvalidOperation:
        return text


def format_value(v: Value) -> str:
    if v is None:
        return ""
    if isinstance(v, Decimal):
        return format(v.normalize(), "f")
    return str(v)


def values_equal(a: Value, b: Value) -> bool:
    """Equality with numeric tolerance; Null equals only Null."""
    if a is None or b is None:
        return a is None and b is None
    if isinstance(a, Decimal) and isinstance(b, Decimal):
        return abs(a - b) <= EPSILON
    if isinstance(a, str) and isinstance(b, str):
        return a == b
    return False


def rows_equal(r1: Sequence[Value], r2: Sequence[Value]) -> bool:
    return len(r1) == len(r2) and all(values_equal(a, b) for a, b in zip(r1, r2))


@dataclass(frozen=True, order=True)
class CellRef:
    """Reference to one cell of a declared input table (1-indexed)."""

    table: str
    row: int
    col: int

    def __str__(self) -> str:
        return f"{self.table}[{self.row},{self.col}]"


class TableError(ValueError):
    """Malformed table data or an unresolvable cell reference."""


@dataclass(frozen=True)
class Table:
    """An ordered bag of rows with named columns.

    Row order is meaningful (order-dependent aggregates rely on it) but table
    equality ignores it: two tables are equal when they contain each other as
    multisets of rows.
    """

    id: str
    column_names: tuple[str, ...]
    rows: tuple[tuple[Value, ...], ...]

    def __post_init__(self) -> None:
        n = len(self.column_names)
        for r in self.rows:
            if len(r) != n:
                raise TableError(
                    f"table {self.id!r}: row of width {len(r)}, expected {n}"
                )

    @staticmethod
    def make(id: str, rows: Iterable[Sequence[Value]],
             column_names: Optional[Sequence[str]] = None) -> "Table":
        rows = tuple(tuple(r) for r in rows)
        if column_names is None:
            width = len(rows[0]) if rows else 0
            column_names = tuple(f"c{i + 1}" for i in range(width))
        return Table(id, tuple(column_names), rows)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return len(self.column_names)

    def cell(self, row: int, col: int) -> Value:
        """Fetch a cell by 1-based row/column index."""
        if not (1 <= row <= self.n_rows and 1 <= col <= self.n_cols):
            raise TableError(f"cell [{row},{col}] out of range for {self.id!r}")
        return self.rows[row - 1][col - 1]

    def contains_rows_of(self, other: "Table") -> bool:
        """Multiset row containment of ``other`` in ``self`` (tolerant)."""
        taken = [False] * self.n_rows
        for r in other.rows:
            for i, own in enumerate(self.rows):
                if not taken[i] and rows_equal(own, r):
                    taken[i] = True
                    break
            else:
                return False
        return True

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Table):
            return NotImplemented
        return (self.n_rows == other.n_rows
                and self.n_cols == other.n_cols
                and self.contains_rows_of(other)
                and other.contains_rows_of(self))

    def __hash__(self) -> int:
        # order-insensitive, id-insensitive equality forbids a finer hash
        return hash((self.n_rows, self.n_cols))


def parse_table(text: str, id: str) -> Table:
    """Parse a CSV document (first row = header) into a Table."""
    reader = csv.reader(io.StringIO(text))
    lines = [row for row in reader if row]
    if not lines:
        raise TableError(f"table {id!r}: empty CSV")
    header = tuple(h.strip() for h in lines[0])
    rows = []
    for line in lines[1:]:
        if len(line) != len(header):
            raise TableError(f"table {id!r}: ragged row {line!r}")
        rows.append(tuple(parse_value(cell) for cell in line))
    return Table(id, header, tuple(rows))


def write_table(table: Table) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(table.column_names)
    for row in table.rows:
        writer.writerow([format_value(v) for v in row])
    return out.getvalue()


def load_table(path: str, id: str) -> Table:
    with open(path, encoding="utf-8") as fh:
        return parse_table(fh.read(), id)
