"""Command-line entry points.

``synth`` searches for queries matching a demonstration, ``eval`` runs a
saved query (concretely or with provenance), ``bench`` replays a benchmark
directory against several pruners, and ``serve`` starts the HTTP service.

Exit codes for ``synth``: 0 when at least one query is found, 2 when the
search completes empty, 1 on input errors.
"""
from __future__ import annotations

import json
import sys

import click

from .abstraction import PrunerKind
from .engine import eval_prov, eval_query
from .exprs import ExprError, format_expr, parse_demo
from .harness import CSV_COLUMNS, load_suite, report_csv, run_suite
from .queries import QueryError, query_from_json, to_sql
from .reporting import report_json_text
from .synth import SynthConfig, synthesize
from .tables import TableError, load_table, write_table

PRUNERS = {k.value: k for k in PrunerKind}


def _load_tables(specs: tuple[str, ...]) -> dict:
    inputs = {}
    for spec in specs:
        if "=" not in spec:
            raise TableError(f"bad --table {spec!r}; expected id=path.csv")
        tid, path = spec.split("=", 1)
        inputs[tid] = load_table(path, tid)
    if not inputs:
        raise TableError("at least one --table is required")
    return inputs


def _fail(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(1)


@click.group()
def main() -> None:
    """Synthesize analytical queries from partial cell-level demonstrations."""


@main.command()
@click.option("--table", "tables", multiple=True, required=True,
              metavar="ID=CSV", help="input table, repeatable")
@click.option("--demo", "demo_path", required=True,
              type=click.Path(), help="demonstration JSON file")
@click.option("--depth", default=3, show_default=True)
@click.option("--limit", default=10, show_default=True,
              help="stop after this many solutions")
@click.option("--timeout", default=600.0, show_default=True)
@click.option("--pruner", default="provenance", show_default=True,
              type=click.Choice(sorted(PRUNERS)))
@click.option("--seed", default=0, show_default=True)
@click.option("--json", "as_json", is_flag=True,
              help="print the full report as JSON")
def synth(tables, demo_path, depth, limit, timeout, pruner, seed, as_json):
    """Search for queries whose provenance generalizes the demonstration."""
    try:
        inputs = _load_tables(tables)
        with open(demo_path) as f:
            demo = parse_demo(f.read())
        config = SynthConfig(depth=depth, limit=limit, timeout=timeout,
                             pruner=PRUNERS[pruner], seed=seed)
        report = synthesize(inputs, demo, config)
    except (OSError, TableError, ExprError, QueryError) as exc:
        _fail(exc)
    base_names = {t.id: t.column_names for t in inputs.values()}
    if as_json:
        click.echo(report_json_text(report, base_names))
    else:
        for s in report.solutions:
            click.echo(f"-- rank {s.rank}")
            click.echo(to_sql(s.query, base_names))
        click.echo(f"-- visited {report.queries_visited}, "
                   f"pruned {report.queries_pruned}, "
                   f"{len(report.solutions)} solution(s)"
                   + (", timed out" if report.timed_out else ""))
    sys.exit(0 if report.solutions else 2)


@main.command("eval")
@click.option("--table", "tables", multiple=True, required=True,
              metavar="ID=CSV")
@click.option("--query", "query_path", required=True, type=click.Path())
@click.option("--prov", is_flag=True,
              help="print the provenance table instead of values")
def eval_cmd(tables, query_path, prov):
    """Evaluate a saved query over the input tables."""
    try:
        inputs = _load_tables(tables)
        with open(query_path) as f:
            q = query_from_json(json.load(f))
        if prov:
            t_star = eval_prov(q, inputs)
            click.echo(",".join(t_star.column_names))
            for row in t_star.cells:
                click.echo(",".join(format_expr(c) for c in row))
        else:
            click.echo(write_table(eval_query(q, inputs)), nl=False)
    except (OSError, TableError, ExprError, QueryError,
            json.JSONDecodeError) as exc:
        _fail(exc)


@main.command()
@click.option("--dir", "bench_dir", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--depth", default=3, show_default=True)
@click.option("--limit", default=50, show_default=True)
@click.option("--timeout", default=600.0, show_default=True)
@click.option("--pruner", "pruners", multiple=True,
              type=click.Choice(sorted(PRUNERS)),
              help="pruners to compare (default: all)")
@click.option("--workers", default=1, show_default=True)
def bench(bench_dir, out_path, depth, limit, timeout, pruners, workers):
    """Run every benchmark under --dir and write a CSV report."""
    try:
        suite = load_suite(bench_dir)
    except (OSError, TableError, ExprError, QueryError) as exc:
        _fail(exc)
    kinds = [PRUNERS[p] for p in pruners] or list(PrunerKind)
    configs = [SynthConfig(depth=depth, limit=limit, timeout=timeout,
                           pruner=k) for k in kinds]
    rows = run_suite(suite, configs, workers=workers)
    text = report_csv(rows)
    with open(out_path, "w") as f:
        f.write(text)
    solved = sum(1 for r in rows if r.get("solved") is True)
    click.echo(f"{len(rows)} runs ({len(suite)} benchmarks x "
               f"{len(configs)} pruners); {solved} solved; "
               f"columns: {','.join(CSV_COLUMNS)}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8765, show_default=True)
def serve(host, port):
    """Start the HTTP synthesis service."""
    import uvicorn

    from .server import app
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
