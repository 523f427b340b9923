import { basename } from "node:path";

import { LineChart } from "echarts/charts";
import {
  GridComponent,
  LegendComponent,
  TitleComponent,
} from "echarts/components";
import * as echarts from "echarts/core";
import { SVGRenderer } from "echarts/renderers";
import type { EChartsOption, SeriesOption } from "echarts/types/dist/shared";

import { Table, readTable } from "./csv.js";

echarts.use([
  LineChart,
  GridComponent,
  LegendComponent,
  TitleComponent,
  SVGRenderer,
]);

export type FigureKind = "sv_decay" | "energy" | "enstrophy" | "error_vs_R";

export const FIGURE_KINDS: FigureKind[] = [
  "sv_decay",
  "energy",
  "enstrophy",
  "error_vs_R",
];

const WIDTH = 900;
const HEIGHT = 560;

/** Columns each figure kind requires in every input file. */
const REQUIRED: Record<FigureKind, string[]> = {
  sv_decay: ["i", "sigma"],
  energy: ["time", "label", "value"],
  enstrophy: ["time", "label", "value"],
  error_vs_R: ["R", "relative_error"],
};

function stem(path: string): string {
  return basename(path).replace(/\.[^.]*$/, "");
}

/** Split a (time, label, value) table into one [time, value] series per label. */
function seriesByLabel(table: Table): Map<string, [number, number][]> {
  const out = new Map<string, [number, number][]>();
  for (const row of table.rows) {
    const label = String(row.label);
    let points = out.get(label);
    if (points === undefined) {
      points = [];
      out.set(label, points);
    }
    points.push([Number(row.time), Number(row.value)]);
  }
  return out;
}

function svDecayOption(tables: Table[]): EChartsOption {
  const table = tables[0]!;
  const data: [number, number][] = table.rows.map((row) => [
    Number(row.i),
    Number(row.sigma),
  ]);
  return {
    animation: false,
    title: { text: "Singular value decay" },
    xAxis: { type: "value", name: "index" },
    yAxis: { type: "log", name: "sigma" },
    series: [{ type: "line", name: "sigma", data, symbolSize: 6 }],
  };
}

function overlayOption(
  tables: Table[],
  title: string,
  valueName: string,
): EChartsOption {
  const series: SeriesOption[] = [];
  for (const table of tables) {
    const prefix = tables.length > 1 ? `${stem(table.path)}:` : "";
    for (const [label, data] of seriesByLabel(table)) {
      series.push({
        type: "line",
        name: `${prefix}${label}`,
        data,
        showSymbol: false,
      });
    }
  }
  return {
    animation: false,
    title: { text: title },
    legend: { top: 28 },
    xAxis: { type: "value", name: "time" },
    yAxis: { type: "value", name: valueName },
    series,
  };
}

function errorVsROption(tables: Table[]): EChartsOption {
  const table = tables[0]!;
  const data: [number, number][] = table.rows.map((row) => [
    Number(row.R),
    Number(row.relative_error),
  ]);
  return {
    animation: false,
    title: { text: "Ensemble average error vs basis size" },
    xAxis: { type: "value", name: "R", minInterval: 1 },
    yAxis: { type: "value", name: "relative error" },
    series: [{ type: "line", name: "relative_error", data, symbolSize: 8 }],
  };
}

/**
 * Build the chart description for a figure kind from already-parsed
 * tables.  Exposed separately from rendering so tests can assert on the
 * scales and data without going through SVG.
 */
export function buildOption(
  kind: FigureKind,
  tables: Table[],
): EChartsOption {
  switch (kind) {
    case "sv_decay":
      return svDecayOption(tables);
    case "energy":
      return overlayOption(tables, "Kinetic energy", "energy");
    case "enstrophy":
      return overlayOption(tables, "Enstrophy", "enstrophy");
    case "error_vs_R":
      return errorVsROption(tables);
  }
}

function expectInputs(kind: FigureKind, count: number): void {
  if (count === 0) {
    throw new Error(`${kind}: at least one input file is required`);
  }
  if ((kind === "sv_decay" || kind === "error_vs_R") && count !== 1) {
    throw new Error(`${kind}: expected exactly one input file, got ${count}`);
  }
}

/** Read the inputs for a figure kind, checking the required columns. */
export function readInputs(kind: FigureKind, paths: string[]): Table[] {
  expectInputs(kind, paths.length);
  return paths.map((path) => readTable(path, REQUIRED[kind]));
}

/** Render a chart description to a standalone SVG string. */
export function renderOption(option: EChartsOption): string {
  const chart = echarts.init(null, undefined, {
    renderer: "svg",
    ssr: true,
    width: WIDTH,
    height: HEIGHT,
  });
  try {
    chart.setOption(option);
    return chart.renderToSVGString();
  } finally {
    chart.dispose();
  }
}

/** CSV paths in, SVG string out. */
export function renderFigure(kind: FigureKind, paths: string[]): string {
  return renderOption(buildOption(kind, readInputs(kind, paths)));
}
