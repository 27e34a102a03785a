/** Median / interquartile aggregation across seeds. */

import { MetricsRow } from "./schema.js";

export interface BandPoint {
  step: number;
  median: number;
  q1: number;
  q3: number;
}

function quantile(sorted: number[], q: number): number {
  if (sorted.length === 0) {
    return NaN;
  }
  const pos = (sorted.length - 1) * q;
  const lo = Math.floor(pos);
  const hi = Math.ceil(pos);
  if (lo === hi) {
    return sorted[lo];
  }
  return sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo);
}

export function summarize(values: number[]): { median: number; q1: number; q3: number } {
  const sorted = [...values].sort((a, b) => a - b);
  return {
    median: quantile(sorted, 0.5),
    q1: quantile(sorted, 0.25),
    q3: quantile(sorted, 0.75),
  };
}

/** Per-step median and IQR across seeds for one condition and metric. */
export function conditionBand(
  rows: MetricsRow[],
  condition: string,
  metric: string
): BandPoint[] {
  const byStep = new Map<number, number[]>();
  for (const row of rows) {
    if (row.condition !== condition) {
      continue;
    }
    const bucket = byStep.get(row.step);
    if (bucket) {
      bucket.push(row.values[metric]);
    } else {
      byStep.set(row.step, [row.values[metric]]);
    }
  }
  const steps = [...byStep.keys()].sort((a, b) => a - b);
  return steps.map((step) => {
    const { median, q1, q3 } = summarize(byStep.get(step)!);
    return { step, median, q1, q3 };
  });
}

/** A flat band over a step range from per-seed terminal values. */
export function flatBand(perSeed: number[], steps: number[]): BandPoint[] {
  const finite = perSeed.filter((v) => Number.isFinite(v));
  const { median, q1, q3 } = summarize(finite.length ? finite : perSeed);
  return steps.map((step) => ({ step, median, q1, q3 }));
}
