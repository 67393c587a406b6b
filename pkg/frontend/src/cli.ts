#!/usr/bin/env node
/** tqmc-plot: render benchmark CSV artifacts as SVG/PNG charts.
 *
 *   tqmc-plot mse       --summary PATH --out PATH [--f-id ID]
 *   tqmc-plot reduction --summary PATH --out PATH --baseline NAME [--raw PATH]
 */

import * as fs from "fs";
import * as path from "path";

import { CsvError, parseRaw, parseSummary } from "./csv";
import { PlotError, plotMse } from "./mse";
import { plotReduction } from "./reduction";

export class UsageError extends Error {}

interface Args {
  command: "mse" | "reduction";
  summary: string;
  out: string;
  fId?: string;
  baseline?: string;
  raw?: string;
}

const USAGE =
  "usage: tqmc-plot mse|reduction --summary PATH [--raw PATH] --out PATH " +
  "[--f-id ID] [--baseline NAME]";

export function parseArgs(argv: string[]): Args {
  if (argv.length === 0) {
    throw new UsageError(USAGE);
  }
  const [command, ...rest] = argv;
  if (command !== "mse" && command !== "reduction") {
    throw new UsageError(`unknown command "${command}"\n${USAGE}`);
  }
  const flags: Record<string, string> = {};
  for (let i = 0; i < rest.length; i += 2) {
    const flag = rest[i];
    const value = rest[i + 1];
    if (!flag.startsWith("--") || value === undefined) {
      throw new UsageError(`malformed arguments near "${flag}"\n${USAGE}`);
    }
    const known = ["--summary", "--out", "--f-id", "--baseline", "--raw"];
    if (!known.includes(flag)) {
      throw new UsageError(`unknown flag "${flag}"\n${USAGE}`);
    }
    flags[flag.slice(2)] = value;
  }
  if (!flags.summary || !flags.out) {
    throw new UsageError(`--summary and --out are required\n${USAGE}`);
  }
  if (command === "reduction" && !flags.baseline) {
    throw new UsageError(`reduction requires --baseline\n${USAGE}`);
  }
  return {
    command,
    summary: flags.summary,
    out: flags.out,
    fId: flags["f-id"],
    baseline: flags.baseline,
    raw: flags.raw,
  };
}

function writeImage(out: string, svg: string): void {
  const ext = path.extname(out).toLowerCase();
  if (ext === ".svg") {
    fs.writeFileSync(out, svg);
    return;
  }
  if (ext === ".png") {
    let Resvg: any;
    try {
      // optional native dependency; SVG output never needs it
      ({ Resvg } = require("@resvg/resvg-js"));
    } catch {
      throw new PlotError(
        "PNG output requires the optional @resvg/resvg-js package; " +
        "install it or use a .svg output path");
    }
    fs.writeFileSync(out, new Resvg(svg).render().asPng());
    return;
  }
  throw new UsageError(`unsupported output extension "${ext}"; use .svg or .png`);
}

export function main(argv: string[], warn: (m: string) => void = (m) =>
    process.stderr.write(`warning: ${m}\n`)): number {
  try {
    const args = parseArgs(argv);
    const rows = parseSummary(fs.readFileSync(args.summary, "utf8"));
    const svg = args.command === "mse"
      ? plotMse(rows, args.fId)
      : plotReduction(rows, {
          baseline: args.baseline!,
          raw: args.raw ? parseRaw(fs.readFileSync(args.raw, "utf8")) : undefined,
          warn,
        });
    writeImage(args.out, svg);
    return 0;
  } catch (err) {
    if (err instanceof UsageError || err instanceof CsvError ||
        err instanceof PlotError) {
      process.stderr.write(`error: ${err.message}\n`);
      return err instanceof UsageError ? 2 : 1;
    }
    if (err instanceof Error && "code" in err && (err as any).code === "ENOENT") {
      process.stderr.write(`error: ${err.message}\n`);
      return 1;
    }
    throw err;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
