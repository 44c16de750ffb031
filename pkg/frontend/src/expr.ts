/**
 * Demonstration expressions, mirroring the service's JSON schema exactly so
 * that export is plain serialization.  The UI never evaluates anything
 * itself; these types only carry structure to and from the service.
 */

export type ConstValue = number | string | null;

export interface ConstExpr {
  kind: "const";
  value: ConstValue;
}

export interface RefExpr {
  kind: "ref";
  table: string;
  row: number;
  col: number;
}

export interface AppExpr {
  kind: "app";
  fn: string;
  args: Expr[];
  partial: boolean;
}

export type Expr = ConstExpr | RefExpr | AppExpr;

/** Draft state while the user is still composing an application.
 *
 * The omission marker (the "…" chip, shown as ◇) is positional here so the
 * grid renders it where the user dropped it, but the wire format only has a
 * `partial` flag: the service matches omitted arguments of commutative
 * functions as a multiset, so the position carries no meaning server-side.
 */
export interface AppDraft {
  fn: string;
  args: Expr[];
  /** index the ◇ chip occupies, or null when the application is complete */
  omitAt: number | null;
}

export class ExprBuildError extends Error {}

export function ref(table: string, row: number, col: number): RefExpr {
  return { kind: "ref", table, row, col };
}

export function constant(value: ConstValue): ConstExpr {
  return { kind: "const", value };
}

export function app(fn: string, args: Expr[], partial = false): AppExpr {
  return finishDraft({ fn, args, omitAt: partial ? args.length : null });
}

/** Validate a draft and produce the wire expression. */
export function finishDraft(draft: AppDraft): AppExpr {
  if (!draft.fn) {
    throw new ExprBuildError("pick a function first");
  }
  if (draft.args.length === 0) {
    // invariant shared with the service: a partial application still needs
    // at least one explicit argument, and a complete one obviously does too
    throw new ExprBuildError(
      draft.omitAt !== null
        ? "an application with the … chip needs at least one explicit argument"
        : "an application needs at least one argument",
    );
  }
  return {
    kind: "app",
    fn: draft.fn,
    args: draft.args,
    partial: draft.omitAt !== null,
  };
}

export function cellLabel(e: RefExpr): string {
  return `${e.table}[${e.row},${e.col}]`;
}

/**
 * Human-oriented preview of an expression, matching how the grid renders
 * internal forms: division as infix, a trailing *100 as a percentage, other
 * applications as calls, omission as ◇.
 */
export function preview(e: Expr): string {
  switch (e.kind) {
    case "const":
      return e.value === null ? "∅" : String(e.value);
    case "ref":
      return cellLabel(e);
    case "app":
      return previewApp(e);
  }
}

function previewApp(e: AppExpr): string {
  const parts = e.args.map(preview);
  if (e.fn === "mul" && e.args.length === 2) {
    const last = e.args[1];
    if (last && last.kind === "const" && last.value === 100 && !e.partial) {
      return `${parts[0]} * 100%`;
    }
  }
  if (e.fn === "div" && e.args.length === 2 && !e.partial) {
    return `${parts[0]} / ${parts[1]}`;
  }
  if (e.partial) {
    parts.push("◇");
  }
  return `${e.fn}(${parts.join(",")})`;
}

/** Preview for an in-progress draft, with the ◇ chip at its actual slot. */
export function previewDraft(draft: AppDraft): string {
  const parts = draft.args.map(preview);
  if (draft.omitAt !== null) {
    parts.splice(Math.min(draft.omitAt, parts.length), 0, "◇");
  }
  return `${draft.fn || "?"}(${parts.join(",")})`;
}
