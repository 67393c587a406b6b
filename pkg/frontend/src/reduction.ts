/** Per-coordinate MSE reduction-factor bars versus a baseline method. */

import { RawRow, SummaryRow, uniqueInOrder } from "./csv";
import { PlotError } from "./mse";
import {
  HEIGHT, MARGIN, PALETTE, WIDTH,
  SvgDoc, linearScale,
} from "./svg";

export interface ReductionOptions {
  baseline: string;
  raw?: RawRow[];
  warn?: (message: string) => void;
}

export interface Bar {
  method: string;
  fId: string;
  factor: number;
  lo?: number;
  hi?: number;
}

/** Leave-one-replicate-out factors give the whisker extent. */
function jackknifeWhisker(baseErr: number[], methErr: number[]):
    { lo: number; hi: number } | undefined {
  const reps = Math.min(baseErr.length, methErr.length);
  if (reps < 2) {
    return undefined;
  }
  const sq = (v: number) => v * v;
  const baseSum = baseErr.slice(0, reps).reduce((acc, e) => acc + sq(e), 0);
  const methSum = methErr.slice(0, reps).reduce((acc, e) => acc + sq(e), 0);
  const factors: number[] = [];
  for (let i = 0; i < reps; i += 1) {
    const b = (baseSum - sq(baseErr[i])) / (reps - 1);
    const m = (methSum - sq(methErr[i])) / (reps - 1);
    if (m > 0) {
      factors.push(b / m);
    }
  }
  if (factors.length === 0) {
    return undefined;
  }
  return { lo: Math.min(...factors), hi: Math.max(...factors) };
}

export function computeReduction(rows: SummaryRow[], opts: ReductionOptions): Bar[] {
  const methods = uniqueInOrder(rows.map((r) => r.method));
  if (!methods.includes(opts.baseline)) {
    throw new PlotError(
      `baseline "${opts.baseline}" not present; methods: ${methods.join(", ")}`);
  }
  const n = Math.max(...rows.map((r) => r.n));
  const at = (method: string, fId: string) =>
    rows.find((r) => r.method === method && r.fId === fId && r.n === n);
  const errList = (method: string, fId: string) =>
    (opts.raw ?? [])
      .filter((r) => r.method === method && r.fId === fId && r.n === n)
      .sort((a, b) => a.replicate - b.replicate)
      .map((r) => r.absError);

  const fIds = uniqueInOrder(rows.filter((r) => r.n === n).map((r) => r.fId));
  const bars: Bar[] = [];
  for (const method of methods) {
    if (method === opts.baseline) {
      continue;
    }
    for (const fId of fIds) {
      const base = at(opts.baseline, fId);
      const meth = at(method, fId);
      if (!base || !meth || meth.mse <= 0) {
        continue;
      }
      const bar: Bar = { method, fId, factor: base.mse / meth.mse };
      const whisker = opts.raw
        ? jackknifeWhisker(errList(opts.baseline, fId), errList(method, fId))
        : undefined;
      if (whisker) {
        bar.lo = whisker.lo;
        bar.hi = whisker.hi;
      }
      bars.push(bar);
    }
  }
  if (bars.length === 0) {
    throw new PlotError(`no comparable methods against baseline "${opts.baseline}"`);
  }
  return bars;
}

export function plotReduction(rows: SummaryRow[], opts: ReductionOptions): string {
  if (rows.length === 0) {
    throw new PlotError("summary table is empty");
  }
  if (!opts.raw) {
    (opts.warn ?? (() => {}))("raw CSV not supplied; drawing bars without whiskers");
  }
  const bars = computeReduction(rows, opts);
  const methods = uniqueInOrder(bars.map((b) => b.method));
  const fIds = uniqueInOrder(bars.map((b) => b.fId));

  const top = Math.max(...bars.map((b) => Math.max(b.factor, b.hi ?? b.factor)));
  const y = linearScale([0, top * 1.15], [HEIGHT - MARGIN.bottom, MARGIN.top]);
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const groupWidth = (x1 - x0) / fIds.length;
  const barWidth = Math.min(40, (groupWidth * 0.8) / methods.length);

  const doc = new SvgDoc();
  doc.line(x0, MARGIN.top, x0, HEIGHT - MARGIN.bottom, "#000000");
  doc.line(x0, HEIGHT - MARGIN.bottom, x1, HEIGHT - MARGIN.bottom, "#000000");
  doc.text((x0 + x1) / 2, 22,
           `MSE reduction vs ${opts.baseline}`, { anchor: "middle", size: 14 });
  doc.text(18, (MARGIN.top + HEIGHT - MARGIN.bottom) / 2, "baseline MSE / method MSE",
           { anchor: "middle", rotate: true });

  // horizontal guide at factor 1 (parity with the baseline)
  doc.line(x0, y(1), x1, y(1), "#999999", 1, "4 4");
  doc.text(x1 + 6, y(1) + 4, "1x", { size: 11, fill: "#777777" });
  const tickStep = top > 5 ? Math.ceil(top / 5) : 1;
  for (let t = 0; t <= top * 1.1; t += tickStep) {
    doc.line(x0 - 5, y(t), x0, y(t), "#000000");
    doc.text(x0 - 9, y(t) + 4, String(t), { anchor: "end", size: 11 });
  }

  bars.forEach((bar) => {
    const gi = fIds.indexOf(bar.fId);
    const mi = methods.indexOf(bar.method);
    const cx = x0 + groupWidth * (gi + 0.5)
      + barWidth * (mi - (methods.length - 1) / 2);
    const color = PALETTE[mi % PALETTE.length];
    doc.rect(cx - barWidth / 2, y(bar.factor), barWidth,
             y(0) - y(bar.factor), color, `bar bar-${bar.method}-${bar.fId}`);
    if (bar.lo !== undefined && bar.hi !== undefined) {
      doc.line(cx, y(bar.lo), cx, y(bar.hi), "#000000", 1.5);
      doc.line(cx - barWidth / 4, y(bar.lo), cx + barWidth / 4, y(bar.lo), "#000000", 1.5);
      doc.line(cx - barWidth / 4, y(bar.hi), cx + barWidth / 4, y(bar.hi), "#000000", 1.5);
    }
  });
  fIds.forEach((fId, gi) => {
    doc.text(x0 + groupWidth * (gi + 0.5), HEIGHT - MARGIN.bottom + 20, fId,
             { anchor: "middle", size: 11 });
  });
  methods.forEach((method, mi) => {
    const legendY = MARGIN.top + 16 + 20 * mi;
    doc.rect(x1 + 10, legendY - 12, 14, 12, PALETTE[mi % PALETTE.length]);
    doc.text(x1 + 30, legendY - 2, method, { size: 12 });
  });
  return doc.render();
}
