"""The running-example fixture: enrollment table, demo grid, ground truth."""
from decimal import Decimal as D

from provsynth import Table
from provsynth.exprs import App, Const, DemoGrid, Ref
from provsynth.queries import Arith, BaseTable, Group, Partition, Proj
from provsynth.tables import CellRef

_ROWS = [
    ("A", 1, "Youth", 1667, 5668), ("A", 1, "Adult", 1367, 5668),
    ("A", 2, "Youth", 256, 5668), ("A", 2, "Adult", 347, 5668),
    ("A", 3, "Youth", 148, 5668), ("A", 3, "Adult", 237, 5668),
    ("A", 4, "Youth", 556, 5668), ("A", 4, "Adult", 432, 5668),
    ("B", 1, "Youth", 2578, 10541), ("B", 1, "Adult", 1200, 10541),
    ("B", 2, "Youth", 700, 10541), ("B", 2, "Adult", 500, 10541),
    ("B", 3, "Youth", 800, 10541), ("B", 3, "Adult", 707, 10541),
    ("B", 4, "Youth", 768, 10541), ("B", 4, "Adult", 801, 10541),
]

COLUMNS = ("City", "Quarter", "Type", "Enrollment", "Population")


def enrollment_table() -> Table:
    rows = [[r[0], D(r[1]), r[2], D(r[3]), D(r[4])] for r in _ROWS]
    return Table.make("T", rows, COLUMNS)


def example_inputs() -> dict[str, Table]:
    return {"T": enrollment_table()}


def _ref(i: int, j: int) -> Ref:
    return Ref(CellRef("T", i, j))


def example_demo() -> DemoGrid:
    """Two demonstrated rows of the cumulative-percentage output."""
    pct1 = App("mul", (App("div", (App("sum", (_ref(1, 4), _ref(2, 4))),
                                   _ref(1, 5))), Const(D(100))))
    pct2 = App("mul", (App("div", (App("sum", (_ref(1, 4), _ref(2, 4), _ref(8, 4)),
                                       partial=True),
                                   _ref(7, 5))), Const(D(100))))
    return DemoGrid(None, (
        (_ref(1, 1), _ref(1, 2), pct1),
        (_ref(7, 1), _ref(7, 2), pct2),
    ))


def ground_truth_query():
    """Per-city cumulative enrollment as a percentage of population."""
    return Proj(
        Arith(
            Partition(
                Group(BaseTable("T"), (1, 2, 5), "sum", 4),
                (1,), "cumsum", 4),
            "percent_of", (5, 3)),
        (1, 2, 6))
