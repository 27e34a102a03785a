/**
 * SVG figure rendering: one figure per metric, a median line plus an
 * interquartile band per condition, steps on the x axis.
 */

import * as echarts from "echarts";

import { BandPoint } from "./stats.js";

export interface FigureSeries {
  condition: string;
  points: BandPoint[];
}

export interface FigureSpec {
  metric: string;
  series: FigureSeries[];
  logY?: boolean;
  width?: number;
  height?: number;
}

const PALETTE = ["#7f7f7f", "#1f77b4", "#ff7f0e", "#d62728", "#9467bd", "#2ca02c"];

export function conditionLabel(condition: string): string {
  if (condition === "random") {
    return "Random";
  }
  if (condition.startsWith("lambda=")) {
    return `λ = ${condition.slice("lambda=".length)}`;
  }
  return condition;
}

/** Stable color assignment: random baseline gray, lambdas by ascending value. */
export function conditionColors(conditions: string[]): Map<string, string> {
  const ordered = [...conditions].sort((a, b) => {
    const la = a.startsWith("lambda=") ? Number(a.slice(7)) : -Infinity;
    const lb = b.startsWith("lambda=") ? Number(b.slice(7)) : -Infinity;
    return la - lb;
  });
  const colors = new Map<string, string>();
  ordered.forEach((condition, i) => {
    colors.set(condition, PALETTE[i % PALETTE.length]);
  });
  return colors;
}

export function renderFigure(spec: FigureSpec): string {
  const width = spec.width ?? 860;
  const height = spec.height ?? 520;
  const colors = conditionColors(spec.series.map((s) => s.condition));

  // one shared category axis of steps; band stacking needs category axes
  const stepSet = new Set<number>();
  for (const s of spec.series) {
    for (const p of s.points) {
      stepSet.add(p.step);
    }
  }
  const steps = [...stepSet].sort((a, b) => a - b);
  const indexOfStep = new Map(steps.map((s, i) => [s, i]));

  const series: echarts.SeriesOption[] = [];
  for (const { condition, points } of spec.series) {
    const color = colors.get(condition)!;
    const label = conditionLabel(condition);
    const q1 = new Array<number | null>(steps.length).fill(null);
    const span = new Array<number | null>(steps.length).fill(null);
    const median = new Array<number | null>(steps.length).fill(null);
    for (const p of points) {
      const i = indexOfStep.get(p.step)!;
      q1[i] = p.q1;
      span[i] = p.q3 - p.q1;
      median[i] = p.median;
    }
    series.push({
      name: `${label} (IQR)`,
      type: "line",
      data: q1,
      stack: `band-${condition}`,
      showSymbol: false,
      lineStyle: { opacity: 0 },
      emphasis: { disabled: true },
      silent: true,
      color,
    });
    series.push({
      name: `${label} (IQR)`,
      type: "line",
      data: span,
      stack: `band-${condition}`,
      showSymbol: false,
      lineStyle: { opacity: 0 },
      areaStyle: { color, opacity: 0.2 },
      emphasis: { disabled: true },
      silent: true,
      color,
    });
    series.push({
      name: label,
      type: "line",
      data: median,
      showSymbol: false,
      lineStyle: { width: 2 },
      color,
    });
  }

  const chart = echarts.init(null, null, {
    renderer: "svg",
    ssr: true,
    width,
    height,
  });
  chart.setOption({
    animation: false,
    backgroundColor: "#ffffff",
    title: { text: spec.metric, left: "center" },
    legend: {
      bottom: 0,
      data: spec.series.map((s) => conditionLabel(s.condition)),
    },
    grid: { left: 70, right: 24, top: 48, bottom: 60 },
    xAxis: {
      type: "category",
      data: steps.map(String),
      name: "step",
      nameLocation: "middle",
      nameGap: 28,
      boundaryGap: false,
    },
    yAxis: {
      type: spec.logY ? "log" : "value",
      name: spec.metric,
      nameLocation: "middle",
      nameGap: 52,
    },
    series,
  });
  const svg = chart.renderToSVGString();
  chart.dispose();
  return svg;
}
