/**
 * Command line: render experiment metrics into SVG figures.
 *
 *   render --metrics PATH [--summary PATH] --out DIR [--metric NAME]...
 *          [--log-y]
 *
 * One figure per metric: per-condition median over seeds with an
 * interquartile band. Per-step metrics come from metrics.csv; terminal
 * held-out metrics come from summary.json (by default looked up next to the
 * metrics file) and render as flat bands across the step range.
 *
 * Exit codes: 0 figures written, 2 schema mismatch (offending column/key is
 * named), 3 no data rows (header-only input), 1 any other error.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import {
  DEFAULT_METRICS,
  MetricsTable,
  SchemaMismatch,
  SummaryData,
  parseMetricsCsv,
  parseSummaryJson,
  splitMetrics,
} from "./schema.js";
import { conditionBand, flatBand } from "./stats.js";
import { FigureSeries, renderFigure } from "./render.js";

interface RenderArgs {
  metrics: string;
  summary?: string;
  out: string;
  metricNames: string[];
  logY: boolean;
}

export function parseArgs(argv: string[]): RenderArgs {
  if (argv[0] !== "render") {
    throw new Error(`unknown subcommand '${argv[0] ?? ""}'; expected 'render'`);
  }
  const args: Partial<RenderArgs> = { metricNames: [], logY: false };
  for (let i = 1; i < argv.length; i++) {
    const flag = argv[i];
    switch (flag) {
      case "--metrics":
        args.metrics = argv[++i];
        break;
      case "--summary":
        args.summary = argv[++i];
        break;
      case "--out":
        args.out = argv[++i];
        break;
      case "--metric":
        args.metricNames!.push(argv[++i]);
        break;
      case "--log-y":
        args.logY = true;
        break;
      default:
        throw new Error(`unknown flag '${flag}'`);
    }
  }
  if (!args.metrics || !args.out) {
    throw new Error("render requires --metrics PATH and --out DIR");
  }
  if (args.metricNames!.length === 0) {
    args.metricNames = [...DEFAULT_METRICS];
  }
  return args as RenderArgs;
}

function stepRange(table: MetricsTable): number[] {
  const steps = new Set<number>();
  for (const row of table.rows) {
    steps.add(row.step);
  }
  return [...steps].sort((a, b) => a - b);
}

export function runRender(args: RenderArgs): number {
  const { csv: csvMetrics, summary: summaryMetrics } = splitMetrics(args.metricNames);
  const table = parseMetricsCsv(fs.readFileSync(args.metrics, "utf8"), csvMetrics);

  if (table.rows.length === 0) {
    console.error("metrics file has a header but no data rows; nothing to render");
    return 3;
  }

  let summaryData: SummaryData | null = null;
  if (summaryMetrics.length > 0) {
    const summaryPath =
      args.summary ?? path.join(path.dirname(args.metrics), "summary.json");
    if (!fs.existsSync(summaryPath)) {
      throw new SchemaMismatch(
        `summary metrics ${summaryMetrics.join(", ")} requested but '${summaryPath}' is missing`
      );
    }
    summaryData = parseSummaryJson(fs.readFileSync(summaryPath, "utf8"), summaryMetrics);
  }

  fs.mkdirSync(args.out, { recursive: true });
  const steps = stepRange(table);
  for (const metric of args.metricNames) {
    let series: FigureSeries[];
    if (summaryMetrics.includes(metric)) {
      series = Object.entries(summaryData!.conditions).map(([condition, entry]) => ({
        condition,
        points: flatBand(entry[metric].per_seed, steps),
      }));
    } else {
      series = table.conditions.map((condition) => ({
        condition,
        points: conditionBand(table.rows, condition, metric),
      }));
    }
    const svg = renderFigure({ metric, series, logY: args.logY });
    const file = path.join(args.out, `${metric}.svg`);
    fs.writeFileSync(file, svg);
    console.log(`wrote ${file}`);
  }
  return 0;
}

export function main(argv: string[]): number {
  try {
    return runRender(parseArgs(argv));
  } catch (err) {
    if (err instanceof SchemaMismatch) {
      console.error(err.message);
      return 2;
    }
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${path.resolve(process.argv[1])}`).href;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
