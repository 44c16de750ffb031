/**
 * Contract tests against the real synthesis service.  A server instance is
 * spawned for the suite; the client is exercised exactly the way the UI
 * uses it (the UI has no semantics of its own to test beyond this).
 */
import { ChildProcess, execFileSync, spawn } from "node:child_process";
import { readFileSync } from "node:fs";
import { join } from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { DemoJSON } from "../src/demo.js";

const ROOT = join(__dirname, "..", "..");
const DATA_DIR = join(ROOT, "tests", "data");
const PORT = 8973;
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;
const client = new ApiClient(BASE);

const csvText = readFileSync(join(DATA_DIR, "enrollment.csv"), "utf8");
const demo: DemoJSON = JSON.parse(
  readFileSync(join(DATA_DIR, "demo.json"), "utf8"),
);

beforeAll(async () => {
  server = spawn(
    "python3",
    ["-m", "uvicorn", "provsynth.server:app", "--port", String(PORT)],
    { cwd: ROOT, stdio: "ignore" },
  );
  const deadline = Date.now() + 30_000;
  while (Date.now() < deadline) {
    if (await client.health()) return;
    await new Promise((r) => setTimeout(r, 250));
  }
  throw new Error("service did not come up");
}, 40_000);

afterAll(() => {
  server?.kill();
});

describe("function palette", () => {
  it("provides the three function groups", async () => {
    const fns = await client.functions();
    expect(fns.aggregate).toContain("sum");
    expect(fns.analytical).toContain("cumsum");
    expect(fns.arithmetic).toContain("percent_of");
  });
});

describe("synthesis round-trip", () => {
  it("accepts the exported demo JSON and returns a Partition By candidate", async () => {
    const report = await client.synthesize({ T: csvText }, demo, {
      depth: 3,
      limit: 1,
      pruner: "provenance",
    });
    expect(report.solutions.length).toBeGreaterThan(0);
    expect(report.solutions.some((s) => s.sql.includes("Partition By"))).toBe(
      true,
    );
    expect(report.queries_visited).toBeGreaterThan(0);
    const witness = report.solutions[0]!.witness;
    expect(witness.rows.length).toBe(demo.rows.length);
  }, 120_000);

  it("exported demo JSON byte-parses under the service's demo parser", () => {
    const exported = JSON.stringify(demo, null, 2);
    execFileSync(
      "python3",
      ["-c", "import sys; from provsynth import parse_demo; parse_demo(sys.stdin.read())"],
      { cwd: ROOT, input: exported },
    );
  });

  it("rejects a second in-flight synthesis request", async () => {
    const first = client.synthesize({ T: csvText }, demo, {
      depth: 2,
      limit: 1,
    });
    await expect(
      client.synthesize({ T: csvText }, demo, { depth: 2, limit: 1 }),
    ).rejects.toThrow(/already running/);
    await first;
  }, 60_000);

  it("surfaces service errors with their status codes", async () => {
    const bad: DemoJSON = {
      columns: null,
      rows: [[{ kind: "ref", table: "Z", row: 1, col: 1 }]],
    };
    await expect(
      client.synthesize({ T: csvText }, bad),
    ).rejects.toMatchObject({ status: 422 });
    await expect(
      client.synthesize({}, demo),
    ).rejects.toBeInstanceOf(ApiError);
  }, 30_000);
});

describe("evaluation round-trip", () => {
  it("evaluates a returned candidate on the full data", async () => {
    const report = await client.synthesize({ T: csvText }, demo, {
      depth: 3,
      limit: 1,
      pruner: "provenance",
    });
    const sol = report.solutions[0]!;
    const out = await client.evalQuery({ T: csvText }, sol.query);
    expect(out.rows.length).toBeGreaterThanOrEqual(demo.rows.length);
    // every witness row index points into the full output (1-based)
    for (const r of sol.witness.rows) {
      expect(r).toBeGreaterThanOrEqual(1);
      expect(r).toBeLessThanOrEqual(out.rows.length);
    }
  }, 120_000);
});
