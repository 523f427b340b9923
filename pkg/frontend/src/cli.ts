#!/usr/bin/env node
import { writeFileSync } from "node:fs";

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { MissingColumnError } from "./csv.js";
import { FIGURE_KINDS, FigureKind, renderFigure } from "./figures.js";

export function run(argv: string[]): number {
  const parser = yargs(argv)
    .usage("figures <kind> --in CSV [--in CSV ...] --out FILE")
    .command("$0 <kind>", "render one figure from pipeline CSV artifacts")
    .positional("kind", { choices: FIGURE_KINDS, demandOption: true })
    .option("in", {
      type: "string",
      array: true,
      demandOption: true,
      describe: "input CSV file(s)",
    })
    .option("out", {
      type: "string",
      demandOption: true,
      describe: "output SVG file",
    })
    .strict()
    .exitProcess(false)
    .fail((msg, err) => {
      throw err ?? new Error(msg);
    });

  let args;
  try {
    args = parser.parseSync();
  } catch (err) {
    process.stderr.write(`figures: ${(err as Error).message}\n`);
    return 2;
  }

  try {
    const svg = renderFigure(args.kind as FigureKind, args.in);
    writeFileSync(args.out, svg);
  } catch (err) {
    if (err instanceof MissingColumnError) {
      process.stderr.write(`figures: ${err.message}\n`);
    } else {
      process.stderr.write(`figures: ${(err as Error).message}\n`);
    }
    return 2;
  }
  process.stdout.write(`figures: wrote ${args.out}\n`);
  return 0;
}

export function main(): void {
  process.exitCode = run(hideBin(process.argv));
}
