"""Deciding whether query outputs generalize a user demonstration.

Three layers:

* ``expr_generalizes`` -- one demonstration expression against one provenance
  expression (group membership, omitted arguments, commutativity);
* ``prov_consistent`` -- a whole provenance table against a demonstration,
  producing a row/column witness;
* ``abstract_consistent`` -- an abstract (ref-set) table against a
  demonstration; its negation licenses pruning.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .exprs import (COMMUTATIVE, App, Const, DemoGrid, Expr, GroupSet,
                    ProvTable, Ref, refs, simplify)
from .tables import CellRef, values_equal


@dataclass(frozen=True)
class MatchWitness:
    """Injective mappings from demonstration rows/columns into table rows/columns (1-based)."""

    rows: tuple[int, ...]
    cols: tuple[int, ...]


def expr_generalizes(e: Expr, e_star: Expr) -> bool:
    """True iff the provenance expression ``e_star`` generalizes demo expression ``e``."""
    if isinstance(e_star, GroupSet):
        return any(expr_generalizes(e, m) for m in e_star.members)
    if isinstance(e, Const):
        return isinstance(e_star, Const) and values_equal(e.value, e_star.value)
    if isinstance(e, Ref):
        return isinstance(e_star, Ref) and e.cell == e_star.cell
    if isinstance(e, App) and isinstance(e_star, App):
        if e.fn != e_star.fn or e_star.partial:
            return False
        if e.fn in COMMUTATIVE:
            if not e.partial and len(e.args) != len(e_star.args):
                return False
            return _embed_multiset(e.args, e_star.args)
        if e.partial:
            return _embed_subsequence(e.args, e_star.args)
        return (len(e.args) == len(e_star.args)
                and all(expr_generalizes(a, b) for a, b in zip(e.args, e_star.args)))
    return False


def _embed_multiset(demo_args: Sequence[Expr], star_args: Sequence[Expr]) -> bool:
    """Injective matching of demo args into star args, any order."""
    cands = [[j for j, s in enumerate(star_args) if expr_generalizes(a, s)]
             for a in demo_args]
    order = sorted(range(len(demo_args)), key=lambda i: len(cands[i]))
    used = [False] * len(star_args)

    def assign(k: int) -> bool:
        if k == len(order):
            return True
        for j in cands[order[k]]:
            if not used[j]:
                used[j] = True
                if assign(k + 1):
                    return True
                used[j] = False
        return False

    return assign(0)


def _embed_subsequence(demo_args: Sequence[Expr], star_args: Sequence[Expr]) -> bool:
    """Order-preserving embedding of demo args into star args."""
    j = 0
    for a in demo_args:
        while j < len(star_args) and not expr_generalizes(a, star_args[j]):
            j += 1
        if j == len(star_args):
            return False
        j += 1
    return True


def _column_alignment(demo: DemoGrid, names: Optional[Sequence[str]],
                      width: int) -> Optional[tuple[int, ...]]:
    """Demo column -> table column (1-based), by name when names align, else identity."""
    if demo.column_names and names:
        mapping = []
        for dn in demo.column_names:
            matches = [i + 1 for i, n in enumerate(names) if n == dn]
            if len(matches) != 1:
                mapping = None
                break
            mapping.append(matches[0])
        if mapping and len(set(mapping)) == len(mapping):
            return tuple(mapping)
    if demo.n_cols == width:
        return tuple(range(1, demo.n_cols + 1))
    return None


def _match_rows(n_demo: int, n_table: int, ok) -> Optional[tuple[int, ...]]:
    """Lexicographically-least injective row assignment; ok(i, r) is 0-based."""
    assigned: list[int] = []
    used = set()

    def go(i: int) -> bool:
        if i == n_demo:
            return True
        for r in range(n_table):
            if r not in used and ok(i, r):
                used.add(r)
                assigned.append(r)
                if go(i + 1):
                    return True
                assigned.pop()
                used.remove(r)
        return False

    if go(0):
        return tuple(r + 1 for r in assigned)
    return None


def prov_consistent(t_star: ProvTable, demo: DemoGrid) -> Optional[MatchWitness]:
    """Witness that some row selection of ``t_star`` generalizes every demo cell."""
    cmap = _column_alignment(demo, t_star.column_names, t_star.n_cols)
    if cmap is None or t_star.n_rows < demo.n_rows:
        return None
    demo_cells = [[simplify(c) for c in row] for row in demo.cells]

    def ok(i: int, r: int) -> bool:
        return all(expr_generalizes(demo_cells[i][j], t_star.cells[r][cmap[j] - 1])
                   for j in range(demo.n_cols))

    rows = _match_rows(demo.n_rows, t_star.n_rows, ok)
    if rows is None:
        return None
    return MatchWitness(rows, cmap)


def refsets_consistent(abs_rows: Sequence[Sequence[frozenset[CellRef]]],
                       ref_grid: Sequence[Sequence[frozenset[CellRef]]]) -> bool:
    """Injective row/column mappings with ref-set containment per cell.

    ``ref_grid`` holds the required refs per demonstration cell; ``abs_rows``
    is the abstract table.  Backtracks over column injections, then matches
    rows.
    """
    if not abs_rows:
        return not ref_grid
    m, n = len(ref_grid), len(ref_grid[0]) if ref_grid else 0
    width = len(abs_rows[0])
    if n > width or m > len(abs_rows):
        return False

    # candidate abstract columns per demo column: some row must contain the refs
    col_cands = []
    for j in range(n):
        cands = [c for c in range(width)
                 if all(any(ref_grid[i][j] <= row[c] for row in abs_rows)
                        for i in range(m))]
        if not cands:
            return False
        col_cands.append(cands)

    order = sorted(range(n), key=lambda j: len(col_cands[j]))
    cmap: dict[int, int] = {}

    def try_cols(k: int) -> bool:
        if k == n:
            def ok(i, r):
                return all(ref_grid[i][j] <= abs_rows[r][cmap[j]] for j in range(n))
            return _match_rows(m, len(abs_rows), ok) is not None
        j = order[k]
        for c in col_cands[j]:
            if c not in cmap.values():
                cmap[j] = c
                if try_cols(k + 1):
                    return True
                del cmap[j]
        return False

    return try_cols(0)


def demo_ref_grid(demo: DemoGrid) -> list[list[frozenset[CellRef]]]:
    return [[refs(c) for c in row] for row in demo.cells]


def abstract_consistent(t_abs, demo: DemoGrid) -> bool:
    """Abstract consistency of an abstract table (or raw ref-set rows) with a demo."""
    rows = getattr(t_abs, "rows", t_abs)
    return refsets_consistent(rows, demo_ref_grid(demo))
