import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { MissingColumnError, readTable } from "../src/csv.js";
import { buildOption, readInputs, renderFigure } from "../src/figures.js";

function tmpCsv(name: string, content: string): string {
  const dir = mkdtempSync(join(tmpdir(), "figures-"));
  const path = join(dir, name);
  writeFileSync(path, content);
  return path;
}

const TWO_SIGMA = "i,sigma,lambda\n1,2,4\n2,1,1\n";

const ENERGY = [
  "time,label,value",
  "0.0,member_0,1.0",
  "0.0,mean,1.0",
  "0.1,member_0,0.9",
  "0.1,mean,0.9",
  "0.2,member_0,0.85",
  "0.2,mean,0.85",
].join("\n") + "\n";

// error table from a pipeline run of the primary component
const ERROR_VS_R = [
  "R,relative_error",
  "2,0.043705",
  "5,0.012081",
  "10,0.004596",
  "20,0.003233",
].join("\n") + "\n";

describe("readTable", () => {
  it("parses rows with numeric typing", () => {
    const table = readTable(tmpCsv("sv.csv", TWO_SIGMA), ["i", "sigma"]);
    expect(table.rows).toHaveLength(2);
    expect(table.rows[0]).toMatchObject({ i: 1, sigma: 2, lambda: 4 });
  });

  it("names the missing column", () => {
    const path = tmpCsv("broken.csv", "i,lambda\n1,4\n");
    try {
      readTable(path, ["i", "sigma"]);
      expect.unreachable("should have thrown");
    } catch (err) {
      expect(err).toBeInstanceOf(MissingColumnError);
      expect((err as MissingColumnError).column).toBe("sigma");
      expect((err as Error).message).toContain("sigma");
    }
  });
});

describe("sv_decay", () => {
  it("puts both singular values on a log axis", () => {
    const path = tmpCsv("sv.csv", TWO_SIGMA);
    const option = buildOption("sv_decay", readInputs("sv_decay", [path]));
    expect(option.yAxis).toMatchObject({ type: "log" });
    const series = (option.series as { data: [number, number][] }[])[0]!;
    expect(series.data).toEqual([
      [1, 2],
      [2, 1],
    ]);
  });

  it("renders a monotone two point trace to SVG", () => {
    const path = tmpCsv("sv.csv", TWO_SIGMA);
    const svg = renderFigure("sv_decay", [path]);
    expect(svg.startsWith("<svg")).toBe(true);
    expect(svg).toContain("</svg>");
  });

  it("rejects several input files", () => {
    const path = tmpCsv("sv.csv", TWO_SIGMA);
    expect(() => readInputs("sv_decay", [path, path])).toThrow(/exactly one/);
  });
});

describe("energy overlay", () => {
  it("splits series by label", () => {
    const path = tmpCsv("full_energy.csv", ENERGY);
    const option = buildOption("energy", readInputs("energy", [path]));
    const series = option.series as { name: string; data: unknown }[];
    expect(series.map((s) => s.name).sort()).toEqual(["mean", "member_0"]);
  });

  it("overlays identical inputs as coincident curves", () => {
    const a = tmpCsv("full_energy.csv", ENERGY);
    const b = tmpCsv("rom_energy.csv", ENERGY);
    const option = buildOption("energy", readInputs("energy", [a, b]));
    const series = option.series as {
      name: string;
      data: [number, number][];
    }[];
    expect(series).toHaveLength(4);
    const byName = new Map(series.map((s) => [s.name, s.data]));
    expect(byName.get("full_energy:mean")).toEqual(
      byName.get("rom_energy:mean"),
    );
    expect(byName.get("full_energy:member_0")).toEqual(
      byName.get("rom_energy:member_0"),
    );
  });

  it("never mutates its input file", () => {
    const path = tmpCsv("full_energy.csv", ENERGY);
    const before = readFileSync(path);
    renderFigure("energy", [path]);
    expect(readFileSync(path).equals(before)).toBe(true);
  });
});

describe("error_vs_R", () => {
  it("keeps the error decreasing from R=10 on", () => {
    const path = tmpCsv("error_vs_R.csv", ERROR_VS_R);
    const option = buildOption("error_vs_R", readInputs("error_vs_R", [path]));
    const series = (option.series as { data: [number, number][] }[])[0]!;
    const late = series.data.filter(([R]) => R >= 10);
    expect(late.length).toBeGreaterThanOrEqual(2);
    for (let k = 1; k < late.length; k++) {
      expect(late[k]![1]).toBeLessThan(late[k - 1]![1]);
    }
    const svg = renderFigure("error_vs_R", [path]);
    expect(svg.startsWith("<svg")).toBe(true);
  });
});
