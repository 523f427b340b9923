import { spawnSync } from "node:child_process";
import { existsSync, mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

const here = dirname(fileURLToPath(import.meta.url));
const CLI = join(here, "..", "dist", "main.js");

const SV = "i,sigma,lambda\n1,2,4\n2,1,1\n";

function workdir(): string {
  return mkdtempSync(join(tmpdir(), "figures-cli-"));
}

function cli(args: string[]) {
  return spawnSync(process.execPath, [CLI, ...args], { encoding: "utf8" });
}

describe("figures CLI", () => {
  it("is built before the tests run", () => {
    expect(existsSync(CLI)).toBe(true);
  });

  it("renders an SVG file and exits 0", () => {
    const dir = workdir();
    const input = join(dir, "sv.csv");
    const out = join(dir, "sv.svg");
    writeFileSync(input, SV);
    const res = cli(["sv_decay", "--in", input, "--out", out]);
    expect(res.status).toBe(0);
    expect(readFileSync(out, "utf8").startsWith("<svg")).toBe(true);
  });

  it("re-renders byte-identical output", () => {
    const dir = workdir();
    const input = join(dir, "sv.csv");
    writeFileSync(input, SV);
    const outA = join(dir, "a.svg");
    const outB = join(dir, "b.svg");
    expect(cli(["sv_decay", "--in", input, "--out", outA]).status).toBe(0);
    expect(cli(["sv_decay", "--in", input, "--out", outB]).status).toBe(0);
    expect(readFileSync(outA).equals(readFileSync(outB))).toBe(true);
  });

  it("exits 2 and names the column when one is missing", () => {
    const dir = workdir();
    const input = join(dir, "sv.csv");
    writeFileSync(input, "i,lambda\n1,4\n");
    const res = cli(["sv_decay", "--in", input, "--out", join(dir, "x.svg")]);
    expect(res.status).toBe(2);
    expect(res.stderr).toContain("sigma");
  });

  it("exits 2 on an unknown figure kind", () => {
    const dir = workdir();
    const res = cli(["volume", "--in", "x.csv", "--out", join(dir, "x.svg")]);
    expect(res.status).toBe(2);
  });
});
