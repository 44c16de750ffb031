"""Canonical JSON views of synthesis results.

The CLI's --json output and the HTTP service both render reports through
``report_json_text`` so the two byte-match for identical inputs.
"""
from __future__ import annotations

import json
from typing import Optional

from .exprs import ProvTable, format_expr
from .queries import QueryAST, query_to_json, to_sql
from .synth import SynthReport
from .tables import Table, format_value


def table_to_json(table: Table) -> dict:
    return {
        "id": table.id,
        "columns": list(table.column_names),
        "rows": [[format_value(v) for v in row] for row in table.rows],
    }


def prov_table_to_json(prov: ProvTable) -> dict:
    return {
        "columns": list(prov.column_names),
        "rows": [[format_expr(c) for c in row] for row in prov.cells],
    }


def report_to_json(report: SynthReport,
                   base_names: Optional[dict] = None) -> dict:
    return {
        "solutions": [
            {
                "rank": s.rank,
                "sql": to_sql(s.query, base_names),
                "query": query_to_json(s.query),
                "witness": {"rows": list(s.witness.rows),
                            "cols": list(s.witness.cols)},
                "visited_at": s.visited_at,
            }
            for s in report.solutions
        ],
        "queries_visited": report.queries_visited,
        "queries_pruned": report.queries_pruned,
        # wall-clock time is deliberately omitted: identical inputs must
        # produce byte-identical reports across the CLI and the service
        "timed_out": report.timed_out,
    }


def report_json_text(report: SynthReport,
                     base_names: Optional[dict] = None) -> str:
    return json.dumps(report_to_json(report, base_names), indent=2)
