import { readFileSync } from "node:fs";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { CsvError, parseCsv } from "../src/csv.js";
import { DemoError, DemoGridModel } from "../src/demo.js";
import { app, constant, ref } from "../src/expr.js";

const DATA_DIR = join(__dirname, "..", "..", "tests", "data");

/** The running-example demonstration, built the way the UI builds it. */
function runningExampleDemo(): DemoGridModel {
  const grid = new DemoGridModel(2, 3);
  const pct = (sumRows: number[], popRow: number, partial: boolean) =>
    app("mul", [
      app(
        "div",
        [
          app("sum", sumRows.map((r) => ref("T", r, 4)), partial),
          ref("T", popRow, 5),
        ],
      ),
      constant(100),
    ]);
  grid.setCell(0, 0, ref("T", 1, 1));
  grid.setCell(0, 1, ref("T", 1, 2));
  grid.setCell(0, 2, pct([1, 2], 1, false));
  grid.setCell(1, 0, ref("T", 7, 1));
  grid.setCell(1, 1, ref("T", 7, 2));
  grid.setCell(1, 2, pct([1, 2, 8], 7, true));
  return grid;
}

describe("demo grid export", () => {
  it("produces JSON identical to the canonical running-example file", () => {
    const golden = JSON.parse(
      readFileSync(join(DATA_DIR, "demo.json"), "utf8"),
    );
    expect(runningExampleDemo().toJSON()).toEqual(golden);
  });

  it("round-trips through import", () => {
    const grid = runningExampleDemo();
    const again = DemoGridModel.importText(grid.exportText());
    expect(again.toJSON()).toEqual(grid.toJSON());
  });

  it("exports only complete rows", () => {
    const grid = new DemoGridModel(2, 2);
    grid.setCell(0, 0, ref("T", 1, 1));
    grid.setCell(0, 1, ref("T", 1, 2));
    grid.setCell(1, 0, ref("T", 2, 1)); // second row incomplete
    expect(grid.toJSON().rows).toHaveLength(1);
  });

  it("refuses to export an empty demonstration", () => {
    expect(() => new DemoGridModel(1, 1).toJSON()).toThrow(DemoError);
  });

  it("gates readiness on having one complete row", () => {
    const grid = new DemoGridModel(1, 2);
    expect(grid.ready).toBe(false);
    grid.setCell(0, 0, ref("T", 1, 1));
    expect(grid.ready).toBe(false);
    grid.setCell(0, 1, ref("T", 1, 2));
    expect(grid.ready).toBe(true);
  });

  it("rejects malformed JSON and non-rectangular grids on import", () => {
    expect(() => DemoGridModel.importText("{not json")).toThrow(DemoError);
    expect(() =>
      DemoGridModel.importText(
        JSON.stringify({
          columns: null,
          rows: [
            [{ kind: "ref", table: "T", row: 1, col: 1 }],
            [
              { kind: "ref", table: "T", row: 2, col: 1 },
              { kind: "ref", table: "T", row: 2, col: 2 },
            ],
          ],
        }),
      ),
    ).toThrow(/rectangular/);
  });
});

describe("csv loading", () => {
  it("parses the running-example table and keeps the raw text", () => {
    const text = readFileSync(join(DATA_DIR, "enrollment.csv"), "utf8");
    const t = parseCsv("T", text);
    expect(t.rows).toHaveLength(17); // header + 16 data rows
    expect(t.rows[0]![0]).toBe("City");
    expect(t.text).toBe(text);
  });

  it("rejects ragged files with an inline-banner error", () => {
    expect(() => parseCsv("T", "a,b\nc\n")).toThrow(CsvError);
    expect(() => parseCsv("T", "")).toThrow(CsvError);
  });
});
