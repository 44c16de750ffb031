/**
 * DOM wiring for demo-studio: a table viewer whose cells are drag sources,
 * an expression builder with an omission (◇) chip, and a synthesis panel.
 * All semantics live in the service; this file only moves JSON around.
 */
import { ApiClient, ApiError, ReportJSON, SolutionJSON } from "./api.js";
import { CsvError, LoadedTable, parseCsv } from "./csv.js";
import { DemoGridModel } from "./demo.js";
import {
  AppDraft,
  Expr,
  ExprBuildError,
  cellLabel,
  finishDraft,
  preview,
  previewDraft,
  ref,
} from "./expr.js";

const OMIT_TOOLTIP =
  "The ◇ chip marks omitted arguments. It is positional here, but for " +
  "commutative functions the service matches the remaining arguments as a " +
  "multiset, so its position does not constrain the search.";

type El = HTMLElement;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  cls?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

const SQL_KEYWORDS =
  /\b(Select|From|Group By|Partition By|Over|Order By|As|On|Join|Left Join|Where)\b/g;

function highlightSql(sql: string): string {
  return sql
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(SQL_KEYWORDS, '<span class="kw">$&</span>');
}

export class App {
  readonly client: ApiClient;
  readonly tables = new Map<string, LoadedTable>();
  demo = new DemoGridModel(2, 3);
  draft: AppDraft = { fn: "", args: [], omitAt: null };
  private target: { row: number; col: number } | null = null;
  private lastReport: ReportJSON | null = null;

  constructor(
    readonly root: El,
    baseUrl = "",
  ) {
    this.client = new ApiClient(baseUrl);
  }

  async start(): Promise<void> {
    this.root.innerHTML = "";
    this.root.append(
      this.buildTablePanel(),
      this.buildDemoPanel(),
      await this.buildBuilderPanel(),
      this.buildSynthPanel(),
    );
    this.render();
  }

  // --- table viewer + drag source ------------------------------------------

  private buildTablePanel(): El {
    const panel = el("section", "panel tables");
    panel.append(el("h2", "", "Input tables"));
    const banner = el("div", "banner hidden");
    panel.append(banner);
    const input = el("input") as HTMLInputElement;
    input.type = "file";
    input.accept = ".csv";
    input.addEventListener("change", async () => {
      const file = input.files?.[0];
      if (!file) return;
      const id = String.fromCharCode(84 + this.tables.size); // T, U, V, ...
      try {
        this.tables.set(id, parseCsv(id, await file.text()));
        banner.classList.add("hidden");
        this.render();
      } catch (exc) {
        banner.textContent =
          exc instanceof CsvError ? `Could not read CSV: ${exc.message}` : String(exc);
        banner.classList.remove("hidden");
      }
    });
    panel.append(input, el("div", "table-views"));
    return panel;
  }

  private renderTables(): void {
    const host = this.root.querySelector(".table-views") as El;
    host.innerHTML = "";
    for (const t of this.tables.values()) {
      const table = el("table", "input-table");
      table.append(el("caption", "", t.id));
      t.rows.forEach((row, r) => {
        const tr = el("tr");
        row.forEach((value, c) => {
          const td = el("td", "cell", value);
          const cell = ref(t.id, r + 1, c + 1);
          td.draggable = true;
          td.title = cellLabel(cell);
          td.addEventListener("dragstart", (ev) =>
            ev.dataTransfer?.setData("application/json", JSON.stringify(cell)),
          );
          tr.append(td);
        });
        table.append(tr);
      });
      host.append(table);
    }
  }

  // --- demonstration grid ----------------------------------------------------

  private buildDemoPanel(): El {
    const panel = el("section", "panel demo");
    panel.append(el("h2", "", "Demonstration"));
    const addRow = el("button", "", "add row");
    addRow.addEventListener("click", () => {
      this.demo.addRow();
      this.render();
    });
    const exporter = el("button", "", "export JSON");
    const io = el("textarea", "demo-json") as HTMLTextAreaElement;
    exporter.addEventListener("click", () => {
      io.value = this.demo.exportText();
    });
    const importer = el("button", "", "import JSON");
    importer.addEventListener("click", () => {
      try {
        this.demo = DemoGridModel.importText(io.value);
        this.render();
      } catch (exc) {
        this.flash(String(exc));
      }
    });
    panel.append(el("div", "demo-grid"), addRow, exporter, importer, io);
    return panel;
  }

  private renderDemo(): void {
    const host = this.root.querySelector(".demo-grid") as El;
    host.innerHTML = "";
    const grid = el("table", "demo-table");
    for (let r = 0; r < this.demo.nRows; r += 1) {
      const tr = el("tr");
      for (let c = 0; c < this.demo.nCols; c += 1) {
        const cell = this.demo.getCell(r, c);
        const td = el("td", "cell drop", cell ? preview(cell) : "·");
        td.addEventListener("dragover", (ev) => ev.preventDefault());
        td.addEventListener("drop", (ev) => {
          ev.preventDefault();
          const data = ev.dataTransfer?.getData("application/json");
          if (!data) return;
          this.demo.setCell(r, c, JSON.parse(data) as Expr);
          this.render();
        });
        td.addEventListener("click", () => {
          this.target = { row: r, col: c };
          this.render();
        });
        if (this.target?.row === r && this.target?.col === c) {
          td.classList.add("target");
        }
        tr.append(td);
      }
      grid.append(tr);
    }
    host.append(grid);
  }

  // --- expression builder ------------------------------------------------------

  private async buildBuilderPanel(): Promise<El> {
    const panel = el("section", "panel builder");
    panel.append(el("h2", "", "Expression builder"));
    const error = el("div", "banner hidden");
    const previewBox = el("div", "preview");
    const fnSelect = el("select") as HTMLSelectElement;
    try {
      const fns = await this.client.functions();
      for (const group of [fns.aggregate, fns.analytical, fns.arithmetic]) {
        for (const fn of group) {
          if (![...fnSelect.options].some((o) => o.value === fn)) {
            fnSelect.append(new Option(fn, fn));
          }
        }
      }
    } catch {
      error.textContent = "function palette unavailable; is the service up?";
      error.classList.remove("hidden");
    }
    fnSelect.addEventListener("change", () => {
      this.draft.fn = fnSelect.value;
      previewBox.textContent = previewDraft(this.draft);
    });

    const argDrop = el("div", "drop arg-slot", "drop arguments here");
    argDrop.addEventListener("dragover", (ev) => ev.preventDefault());
    argDrop.addEventListener("drop", (ev) => {
      ev.preventDefault();
      const data = ev.dataTransfer?.getData("application/json");
      if (!data) return;
      this.draft.args.push(JSON.parse(data) as Expr);
      previewBox.textContent = previewDraft(this.draft);
    });

    const constInput = el("input") as HTMLInputElement;
    constInput.placeholder = "constant";
    const addConst = el("button", "", "add constant");
    addConst.addEventListener("click", () => {
      const raw = constInput.value.trim();
      if (!raw) return;
      const num = Number(raw);
      this.draft.args.push({
        kind: "const",
        value: Number.isFinite(num) ? num : raw,
      });
      previewBox.textContent = previewDraft(this.draft);
    });

    const omit = el("button", "", "… (omit rest)");
    omit.title = OMIT_TOOLTIP;
    omit.addEventListener("click", () => {
      this.draft.omitAt = this.draft.args.length;
      previewBox.textContent = previewDraft(this.draft);
    });

    const done = el("button", "", "place in selected cell");
    done.addEventListener("click", () => {
      if (!this.target) {
        error.textContent = "select a demonstration cell first";
        error.classList.remove("hidden");
        return;
      }
      try {
        this.draft.fn = this.draft.fn || fnSelect.value;
        const built = finishDraft(this.draft);
        this.demo.setCell(this.target.row, this.target.col, built);
        this.draft = { fn: "", args: [], omitAt: null };
        error.classList.add("hidden");
        this.render();
      } catch (exc) {
        error.textContent =
          exc instanceof ExprBuildError ? exc.message : String(exc);
        error.classList.remove("hidden");
      }
    });

    panel.append(fnSelect, argDrop, constInput, addConst, omit, done,
                 previewBox, error);
    return panel;
  }

  // --- synthesis panel -----------------------------------------------------------

  private buildSynthPanel(): El {
    const panel = el("section", "panel synth");
    panel.append(el("h2", "", "Synthesis"));
    const error = el("div", "banner hidden");
    const run = el("button", "synth-run", "synthesize");
    run.addEventListener("click", () => void this.runSynthesis(error));
    const counters = el("div", "counters");
    const results = el("div", "results");
    panel.append(run, error, counters, results);
    return panel;
  }

  private async runSynthesis(error: El): Promise<void> {
    const run = this.root.querySelector(".synth-run") as HTMLButtonElement;
    run.disabled = true; // single in-flight request
    error.classList.add("hidden");
    try {
      const tables = Object.fromEntries(
        [...this.tables.values()].map((t) => [t.id, t.text]),
      );
      this.lastReport = await this.client.synthesize(
        tables,
        this.demo.toJSON(),
        { depth: 3, limit: 10, pruner: "provenance" },
      );
      this.renderReport(this.lastReport);
    } catch (exc) {
      const message =
        exc instanceof ApiError
          ? `service error ${exc.status}: ${exc.message}`
          : String(exc);
      error.innerHTML = "";
      error.append(el("span", "", message));
      const retry = el("button", "", "retry");
      retry.addEventListener("click", () => void this.runSynthesis(error));
      error.append(retry);
      error.classList.remove("hidden");
    } finally {
      run.disabled = false;
      this.render();
    }
  }

  private renderReport(report: ReportJSON): void {
    const counters = this.root.querySelector(".counters") as El;
    counters.textContent =
      `visited ${report.queries_visited}, pruned ${report.queries_pruned}` +
      (report.timed_out ? " (timed out)" : "");
    const results = this.root.querySelector(".results") as El;
    results.innerHTML = "";
    for (const sol of report.solutions) {
      results.append(this.renderSolution(sol));
    }
  }

  private renderSolution(sol: SolutionJSON): El {
    const card = el("div", "solution");
    card.append(el("div", "rank", `#${sol.rank}`));
    const code = el("pre", "sql");
    code.innerHTML = highlightSql(sol.sql);
    card.append(code);
    const runBtn = el("button", "", "run on my data");
    const out = el("div", "full-output");
    runBtn.addEventListener("click", async () => {
      const tables = Object.fromEntries(
        [...this.tables.values()].map((t) => [t.id, t.text]),
      );
      try {
        const res = await this.client.evalQuery(tables, sol.query);
        out.innerHTML = "";
        const table = el("table", "output-table");
        res.rows.forEach((row, i) => {
          const tr = el("tr");
          // the witness maps demo rows to 1-based full-output rows
          if (sol.witness.rows.includes(i + 1)) tr.classList.add("matched");
          row.forEach((v) => tr.append(el("td", "cell", v)));
          table.append(tr);
        });
        out.append(table);
      } catch (exc) {
        out.textContent = String(exc);
      }
    });
    card.append(runBtn, out);
    return card;
  }

  private flash(message: string): void {
    const banner = this.root.querySelector(".banner");
    if (banner) {
      banner.textContent = message;
      banner.classList.remove("hidden");
    }
  }

  render(): void {
    this.renderTables();
    this.renderDemo();
    const run = this.root.querySelector(".synth-run") as HTMLButtonElement | null;
    if (run) {
      run.disabled =
        !this.demo.ready || this.tables.size === 0 || this.client.busy;
    }
  }
}

export function mount(selector = "#app", baseUrl = ""): Promise<void> {
  const host = document.querySelector(selector);
  if (!host) throw new Error(`no element matches ${selector}`);
  return new App(host as El, baseUrl).start();
}
