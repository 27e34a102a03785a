/**
 * Parsing and validation of the experiment output schemas.
 *
 * metrics.csv carries per-step rows keyed by (condition, seed, step);
 * summary.json carries terminal per-condition statistics including the
 * per-seed held-out errors. Any column or key that rendering needs but the
 * input lacks is a SchemaMismatch naming the offender.
 */

export const METRICS_HEADER = [
  "experiment",
  "condition",
  "seed",
  "step",
  "param_error",
  "cov_trace",
  "task_cost",
  "info_cost",
  "wall_ms",
] as const;

export const CSV_METRICS = ["param_error", "cov_trace", "task_cost", "info_cost", "wall_ms"];
export const SUMMARY_METRICS = ["heldout_single_step_err", "heldout_autoregressive_err"];
export const DEFAULT_METRICS = [
  "param_error",
  "cov_trace",
  "heldout_single_step_err",
  "heldout_autoregressive_err",
];

export class SchemaMismatch extends Error {
  constructor(message: string) {
    super(`SchemaMismatch: ${message}`);
    this.name = "SchemaMismatch";
  }
}

export interface MetricsRow {
  condition: string;
  seed: number;
  step: number;
  values: Record<string, number>;
}

export interface MetricsTable {
  header: string[];
  rows: MetricsRow[];
  conditions: string[];
}

export interface SummaryMetricEntry {
  median: number;
  per_seed: number[];
}

export interface SummaryData {
  conditions: Record<string, Record<string, SummaryMetricEntry>>;
}

const KEY_COLUMNS = ["condition", "seed", "step"];

export function parseMetricsCsv(text: string, requested: string[]): MetricsTable {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaMismatch("metrics file is empty (no header row)");
  }
  const header = lines[0].split(",");
  for (const key of KEY_COLUMNS) {
    if (!header.includes(key)) {
      throw new SchemaMismatch(`metrics header lacks required column '${key}'`);
    }
  }
  for (const metric of requested) {
    if (!header.includes(metric)) {
      throw new SchemaMismatch(`requested metric column '${metric}' not in CSV header`);
    }
  }
  const index = new Map(header.map((name, i) => [name, i]));
  const rows: MetricsRow[] = [];
  const conditions: string[] = [];
  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== header.length) {
      throw new SchemaMismatch(
        `row ${i} has ${parts.length} fields, header has ${header.length}`
      );
    }
    const condition = parts[index.get("condition")!];
    const seed = Number(parts[index.get("seed")!]);
    const step = Number(parts[index.get("step")!]);
    if (!Number.isFinite(seed) || !Number.isFinite(step)) {
      throw new SchemaMismatch(`row ${i}: non-numeric seed or step`);
    }
    const values: Record<string, number> = {};
    for (const metric of requested) {
      const raw = parts[index.get(metric)!];
      const value = Number(raw);
      if (!Number.isFinite(value)) {
        throw new SchemaMismatch(`row ${i}: non-numeric value '${raw}' in '${metric}'`);
      }
      values[metric] = value;
    }
    if (!conditions.includes(condition)) {
      conditions.push(condition);
    }
    rows.push({ condition, seed, step, values });
  }
  return { header, rows, conditions };
}

export function parseSummaryJson(text: string, requested: string[]): SummaryData {
  let data: unknown;
  try {
    data = JSON.parse(text);
  } catch (err) {
    throw new SchemaMismatch(`summary file is not valid JSON: ${(err as Error).message}`);
  }
  const root = data as { conditions?: Record<string, Record<string, SummaryMetricEntry>> };
  if (!root || typeof root !== "object" || !root.conditions) {
    throw new SchemaMismatch("summary lacks the 'conditions' section");
  }
  for (const [condition, entry] of Object.entries(root.conditions)) {
    for (const metric of requested) {
      const stat = entry[metric];
      if (!stat || typeof stat.median !== "number" || !Array.isArray(stat.per_seed)) {
        throw new SchemaMismatch(
          `summary condition '${condition}' lacks '${metric}' with median/per_seed`
        );
      }
    }
  }
  return { conditions: root.conditions };
}

/** Split a requested metric list into CSV-sourced and summary-sourced parts. */
export function splitMetrics(metrics: string[]): { csv: string[]; summary: string[] } {
  const csv: string[] = [];
  const summary: string[] = [];
  for (const metric of metrics) {
    if (SUMMARY_METRICS.includes(metric)) {
      summary.push(metric);
    } else {
      csv.push(metric);
    }
  }
  return { csv, summary };
}
