/** CSV loading for the table viewer. Parsing only; no interpretation. */
import Papa from "papaparse";

export class CsvError extends Error {}

export interface LoadedTable {
  id: string;
  /** raw CSV text, forwarded verbatim to the service */
  text: string;
  rows: string[][];
}

export function parseCsv(id: string, text: string): LoadedTable {
  const res = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (res.errors.length > 0) {
    const first = res.errors[0]!;
    throw new CsvError(`row ${first.row}: ${first.message}`);
  }
  const rows = res.data;
  if (rows.length === 0) {
    throw new CsvError("the file is empty");
  }
  const width = rows[0]!.length;
  if (width === 0 || rows.some((r) => r.length !== width)) {
    throw new CsvError("all rows must have the same number of fields");
  }
  return { id, text, rows };
}
