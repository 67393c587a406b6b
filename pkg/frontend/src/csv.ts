/** Parsing and validation of the versioned benchmark CSV artifacts. */

export const CSV_MAGIC = "# tqmc-bench v1";

const SUMMARY_HEADER = ["method", "proposal", "n", "f_id", "mse", "ess_mean", "slope"];
const RAW_HEADER = ["method", "proposal", "kind", "n", "replicate", "f_id", "estimate", "abs_error"];

export class CsvError extends Error {}

export interface SummaryRow {
  method: string;
  proposal: string;
  n: number;
  fId: string;
  mse: number;
  essMean: number;
  slope: number;
}

export interface RawRow {
  method: string;
  proposal: string;
  kind: string;
  n: number;
  replicate: number;
  fId: string;
  estimate: number;
  absError: number;
}

function splitRecords(text: string, expectedHeader: string[], label: string): string[][] {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0 || lines[0].trim() !== CSV_MAGIC) {
    throw new CsvError(`${label}: missing magic first line "${CSV_MAGIC}"`);
  }
  if (lines.length < 2) {
    throw new CsvError(`${label}: missing header row`);
  }
  const header = lines[1].split(",").map((c) => c.trim());
  if (header.join(",") !== expectedHeader.join(",")) {
    throw new CsvError(
      `${label}: unexpected header [${header.join(", ")}], ` +
      `expected [${expectedHeader.join(", ")}]`);
  }
  return lines.slice(2).map((line, i) => {
    const cells = line.split(",").map((c) => c.trim());
    if (cells.length !== expectedHeader.length) {
      throw new CsvError(`${label}: row ${i + 1} has ${cells.length} cells, ` +
        `expected ${expectedHeader.length}`);
    }
    return cells;
  });
}

function parseNumber(cell: string, what: string): number {
  const v = Number(cell);
  if (cell === "" || Number.isNaN(v)) {
    throw new CsvError(`${what} is not a number: "${cell}"`);
  }
  return v;
}

function parseCount(cell: string, what: string): number {
  const v = parseNumber(cell, what);
  if (!Number.isInteger(v) || v <= 0 || (v & (v - 1)) !== 0) {
    throw new CsvError(`${what} must be a positive power of 2, got "${cell}"`);
  }
  return v;
}

export function parseSummary(text: string): SummaryRow[] {
  return splitRecords(text, SUMMARY_HEADER, "summary CSV").map((cells, i) => {
    const mse = parseNumber(cells[4], `summary row ${i + 1}: mse`);
    if (mse < 0) {
      throw new CsvError(`summary row ${i + 1}: mse must be >= 0, got ${mse}`);
    }
    return {
      method: cells[0],
      proposal: cells[1],
      n: parseCount(cells[2], `summary row ${i + 1}: n`),
      fId: cells[3],
      mse,
      essMean: parseNumber(cells[5], `summary row ${i + 1}: ess_mean`),
      slope: Number(cells[6]),  // may be nan for single-n tables
    };
  });
}

export function parseRaw(text: string): RawRow[] {
  return splitRecords(text, RAW_HEADER, "raw CSV").map((cells, i) => ({
    method: cells[0],
    proposal: cells[1],
    kind: cells[2],
    n: parseCount(cells[3], `raw row ${i + 1}: n`),
    replicate: parseNumber(cells[4], `raw row ${i + 1}: replicate`),
    fId: cells[5],
    estimate: parseNumber(cells[6], `raw row ${i + 1}: estimate`),
    absError: parseNumber(cells[7], `raw row ${i + 1}: abs_error`),
  }));
}

export function uniqueInOrder(values: string[]): string[] {
  return [...new Set(values)];
}
