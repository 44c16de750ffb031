"""Table core: CSV parsing, values, cell addressing, tolerant equality."""
from decimal import Decimal

import pytest

from provsynth import (CellRef, EPSILON, Table, TableError, format_value,
                       parse_table, parse_value, values_equal, write_table)


def test_parse_value_types():
    assert parse_value("12") == Decimal("12")
    assert parse_value("1.5") == Decimal("1.5")
    assert parse_value("abc") == "abc"
    assert parse_value("") is None


def test_format_value_round_trip():
    for text in ("12", "1.5", "abc", ""):
        assert format_value(parse_value(text)) == text


def test_values_equal_tolerance():
    # numeric comparison uses the fixed epsilon, not exactness
    assert values_equal(Decimal("1.0000000001"), Decimal("1")) is True
    assert values_equal(Decimal("1.1"), Decimal("1")) is False
    assert values_equal("a", "a") is True
    assert values_equal("a", Decimal("1")) is False
    assert values_equal(None, None) is True
    assert EPSILON == Decimal("1e-9")


def test_parse_table_shapes_and_cells():
    t = parse_table("x,y\na,1\nb,2\n", "T")
    assert t.n_rows == 2 and t.n_cols == 2
    assert t.column_names == ("x", "y")
    # cell addressing is 1-based
    assert t.cell(1, 1) == "a"
    assert t.cell(2, 2) == Decimal("2")
    with pytest.raises(TableError):
        t.cell(0, 1)
    with pytest.raises(TableError):
        t.cell(3, 1)


def test_write_table_round_trip(table_t):
    again = parse_table(write_table(table_t), "T")
    assert again == table_t
    assert again.column_names == table_t.column_names


def test_table_equality_ignores_row_order():
    a = Table.make("A", [("x", Decimal(1)), ("y", Decimal(2))])
    b = Table.make("B", [("y", Decimal(2)), ("x", Decimal(1))])
    assert a == b
    c = Table.make("C", [("x", Decimal(1)), ("x", Decimal(1))])
    assert a != c  # multiset containment, not set containment


def test_table_equality_multiset():
    a = Table.make("A", [("x",), ("x",), ("y",)])
    b = Table.make("B", [("x",), ("y",), ("y",)])
    assert a != b


def test_ragged_rows_rejected():
    with pytest.raises(TableError):
        Table.make("T", [("a", "b"), ("c",)])


def test_cellref_fields():
    r = CellRef("T", 3, 2)
    assert (r.table, r.row, r.col) == ("T", 3, 2)
    assert str(r) == "T[3,2]"
