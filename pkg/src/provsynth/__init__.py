"""Synthesis of analytical queries from partial computation demonstrations."""

from .tables import (CellRef, Table, TableError, Value, EPSILON, load_table,
                     parse_table, parse_value, format_value, values_equal,
                     write_table)
from .exprs import (AGG_FNS, ANA_FNS, ARITH_FNS, App, Const, DemoGrid, Expr,
                    ExprError, GroupSet, ProvTable,
                    Ref, apply_fn, check_demo_refs, demo_from_json,
                    demo_to_json, eval_expr, expr_from_json, expr_to_json,
                    format_expr, parse_demo, refs, simplify, write_demo)
from .queries import (Arith, Atom, BaseTable, ColOperand, ConstOperand,
                      Filter, Group, Hole, Join, LeftJoin, Partition,
                      Predicate, Proj, QueryAST, QueryError, Sort, holes,
                      is_concrete, query_from_json, query_to_json, size,
                      substitute, to_sql)
from .engine import eval_prov, eval_prov_table, eval_query
from .consistency import (MatchWitness, abstract_consistent, expr_generalizes,
                          prov_consistent)
from .abstraction import (AbsTable, PrunerKind, eval_abs, prune_check,
                          prune_check_type, prune_check_value)
from .synth import (Solution, SynthConfig, SynthReport, construct_skeletons,
                    synthesize)
from .harness import (Benchmark, HarnessError, generate_demo, load_benchmark,
                      load_suite, report_csv, run_suite, save_benchmark)
from .reporting import report_json_text, report_to_json, table_to_json

__version__ = "0.1.0"
