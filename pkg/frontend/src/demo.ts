/**
 * The partial output grid the user fills in, and its canonical JSON form.
 * The wire format is exactly what the service's demonstration parser reads,
 * so export/import is a structural check plus JSON (de)serialization.
 */
import { Expr } from "./expr.js";

export interface DemoJSON {
  columns: string[] | null;
  rows: Expr[][];
}

export class DemoError extends Error {}

export class DemoGridModel {
  columns: string[] | null;
  private cells: (Expr | null)[][];

  constructor(nRows: number, nCols: number, columns: string[] | null = null) {
    if (nRows < 1 || nCols < 1) {
      throw new DemoError("the demonstration grid needs at least one cell");
    }
    if (columns !== null && columns.length !== nCols) {
      throw new DemoError("column names must match the grid width");
    }
    this.columns = columns;
    this.cells = Array.from({ length: nRows }, () =>
      Array.from({ length: nCols }, () => null),
    );
  }

  get nRows(): number {
    return this.cells.length;
  }

  get nCols(): number {
    return this.cells[0]!.length;
  }

  setCell(row: number, col: number, e: Expr | null): void {
    if (row < 0 || row >= this.nRows || col < 0 || col >= this.nCols) {
      throw new DemoError(`cell (${row},${col}) is outside the grid`);
    }
    this.cells[row]![col] = e;
  }

  getCell(row: number, col: number): Expr | null {
    return this.cells[row]?.[col] ?? null;
  }

  addRow(): void {
    this.cells.push(Array.from({ length: this.nCols }, () => null));
  }

  /** A row is complete when every one of its cells holds an expression. */
  rowComplete(row: number): boolean {
    return (this.cells[row] ?? []).every((c) => c !== null);
  }

  /** Synthesis needs at least one fully demonstrated row. */
  get ready(): boolean {
    return this.cells.some((_, r) => this.rowComplete(r));
  }

  /** Export only the complete rows, in display order. */
  toJSON(): DemoJSON {
    const rows = this.cells.filter((row) => row.every((c) => c !== null));
    if (rows.length === 0) {
      throw new DemoError("demonstrate at least one complete row first");
    }
    return { columns: this.columns, rows: rows as Expr[][] };
  }

  exportText(): string {
    return JSON.stringify(this.toJSON(), null, 2);
  }

  static fromJSON(obj: DemoJSON): DemoGridModel {
    if (!obj || !Array.isArray(obj.rows) || obj.rows.length === 0) {
      throw new DemoError("demonstration JSON needs a non-empty 'rows' array");
    }
    const width = obj.rows[0]!.length;
    if (width === 0 || obj.rows.some((r) => r.length !== width)) {
      throw new DemoError("demonstration rows must be rectangular");
    }
    const grid = new DemoGridModel(obj.rows.length, width, obj.columns ?? null);
    obj.rows.forEach((row, r) =>
      row.forEach((cell, c) => grid.setCell(r, c, checkExpr(cell))),
    );
    return grid;
  }

  static importText(text: string): DemoGridModel {
    let obj: DemoJSON;
    try {
      obj = JSON.parse(text);
    } catch (exc) {
      throw new DemoError(`malformed demonstration JSON: ${exc}`);
    }
    return DemoGridModel.fromJSON(obj);
  }
}

function checkExpr(e: Expr): Expr {
  if (!e || typeof e !== "object") {
    throw new DemoError(`bad expression: ${JSON.stringify(e)}`);
  }
  switch (e.kind) {
    case "const":
      return e;
    case "ref":
      if (!e.table || !Number.isInteger(e.row) || !Number.isInteger(e.col)) {
        throw new DemoError(`bad cell reference: ${JSON.stringify(e)}`);
      }
      return e;
    case "app":
      if (!e.fn || !Array.isArray(e.args) || e.args.length === 0) {
        throw new DemoError(`bad application: ${JSON.stringify(e)}`);
      }
      e.args.forEach(checkExpr);
      return e;
    default:
      throw new DemoError(`unknown expression kind in ${JSON.stringify(e)}`);
  }
}
