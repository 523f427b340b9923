import { readFileSync } from "node:fs";

import Papa from "papaparse";

/** A parsed CSV file: the header row plus one record per data row. */
export interface Table {
  path: string;
  header: string[];
  rows: Record<string, string | number>[];
}

/** Raised when an input file lacks a column a figure kind requires. */
export class MissingColumnError extends Error {
  readonly column: string;
  readonly file: string;

  constructor(column: string, file: string) {
    super(`${file}: missing required column "${column}"`);
    this.name = "MissingColumnError";
    this.column = column;
    this.file = file;
  }
}

/**
 * Read a delimited file and check that every required column is present.
 * Values are numeric where they parse as numbers; rows are returned in
 * file order and the file itself is never touched again afterwards.
 */
export function readTable(path: string, required: string[]): Table {
  const text = readFileSync(path, "utf8");
  const parsed = Papa.parse<Record<string, string | number>>(text, {
    header: true,
    dynamicTyping: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0]!;
    throw new Error(`${path}: ${first.message} (row ${first.row})`);
  }
  const header = parsed.meta.fields ?? [];
  for (const column of required) {
    if (!header.includes(column)) {
      throw new MissingColumnError(column, path);
    }
  }
  return { path, header, rows: parsed.data };
}

/** Numeric column values, in row order. */
export function column(table: Table, name: string): number[] {
  return table.rows.map((row) => Number(row[name]));
}
