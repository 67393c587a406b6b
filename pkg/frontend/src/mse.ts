/** Log-log MSE-versus-n chart with an O(1/n) reference guide. */

import { SummaryRow, uniqueInOrder } from "./csv";
import {
  HEIGHT, MARGIN, PALETTE, WIDTH,
  SvgDoc, decadeTicks, linearScale, powerLabel,
} from "./svg";

export class PlotError extends Error {}

interface Series {
  method: string;
  points: Array<{ n: number; mse: number }>;
}

function seriesFor(rows: SummaryRow[], fId: string): Series[] {
  const methods = uniqueInOrder(rows.map((r) => r.method));
  return methods.map((method) => ({
    method,
    points: rows
      .filter((r) => r.method === method && r.fId === fId)
      .sort((a, b) => a.n - b.n)
      .map((r) => ({ n: r.n, mse: r.mse })),
  }));
}

/** The guide is anchored at the first point of the MC series (by name),
 *  falling back to the first series when no method is named like plain MC. */
function anchorSeries(series: Series[]): Series {
  const isMc = (name: string) => {
    const lower = name.toLowerCase();
    return lower === "mc" || (lower.startsWith("mc") && !lower.includes("rqmc"));
  };
  return series.find((s) => isMc(s.method) && s.points.length > 0)
    ?? series.find((s) => s.points.length > 0)!;
}

export function plotMse(rows: SummaryRow[], fId: string | undefined): string {
  if (rows.length === 0) {
    throw new PlotError("summary table is empty");
  }
  const available = uniqueInOrder(rows.map((r) => r.fId));
  const chosen = fId ?? available[0];
  if (!available.includes(chosen)) {
    throw new PlotError(
      `unknown f_id "${chosen}"; available: ${available.join(", ")}`);
  }
  const series = seriesFor(rows, chosen).filter((s) => s.points.length > 0);
  const pts = series.flatMap((s) => s.points).filter((p) => p.mse > 0);
  if (pts.length === 0) {
    throw new PlotError(`no positive MSE values for f_id "${chosen}"`);
  }

  const lx = (n: number) => Math.log10(n);
  const ly = (m: number) => Math.log10(m);
  const xDomain: [number, number] = [
    Math.min(...pts.map((p) => lx(p.n))),
    Math.max(...pts.map((p) => lx(p.n))),
  ];
  const anchor = anchorSeries(series);
  const a0 = anchor.points[0];
  const guideAt = (n: number) => a0.mse * (a0.n / n);
  const yValues = pts.map((p) => ly(p.mse))
    .concat([ly(guideAt(Math.pow(10, xDomain[0]))), ly(guideAt(Math.pow(10, xDomain[1])))]);
  const yDomain: [number, number] = [
    Math.min(...yValues) - 0.2,
    Math.max(...yValues) + 0.2,
  ];
  const x = linearScale(xDomain, [MARGIN.left, WIDTH - MARGIN.right]);
  const y = linearScale(yDomain, [HEIGHT - MARGIN.bottom, MARGIN.top]);

  const doc = new SvgDoc();
  // frame and ticks
  doc.line(MARGIN.left, MARGIN.top, MARGIN.left, HEIGHT - MARGIN.bottom, "#000000");
  doc.line(MARGIN.left, HEIGHT - MARGIN.bottom,
           WIDTH - MARGIN.right, HEIGHT - MARGIN.bottom, "#000000");
  for (const n of uniqueInOrder(pts.map((p) => String(p.n))).map(Number)) {
    const px = x(lx(n));
    doc.line(px, HEIGHT - MARGIN.bottom, px, HEIGHT - MARGIN.bottom + 5, "#000000");
    doc.text(px, HEIGHT - MARGIN.bottom + 20, String(n), { anchor: "middle", size: 11 });
  }
  for (const e of decadeTicks(yDomain[0], yDomain[1])) {
    const py = y(e);
    doc.line(MARGIN.left - 5, py, MARGIN.left, py, "#000000");
    doc.line(MARGIN.left, py, WIDTH - MARGIN.right, py, "#dddddd");
    doc.text(MARGIN.left - 9, py + 4, powerLabel(e), { anchor: "end", size: 11 });
  }
  doc.text((MARGIN.left + WIDTH - MARGIN.right) / 2, HEIGHT - 12, "n (samples)",
           { anchor: "middle" });
  doc.text(18, (MARGIN.top + HEIGHT - MARGIN.bottom) / 2, "MSE",
           { anchor: "middle", rotate: true });
  doc.text((MARGIN.left + WIDTH - MARGIN.right) / 2, 22, `MSE vs n  (f = ${chosen})`,
           { anchor: "middle", size: 14 });

  // O(1/n) guide
  doc.polyline(
    [[x(xDomain[0]), y(ly(guideAt(Math.pow(10, xDomain[0]))))],
     [x(xDomain[1]), y(ly(guideAt(Math.pow(10, xDomain[1]))))]],
    "#999999", "guide", "6 4");
  doc.text(WIDTH - MARGIN.right + 10, y(ly(guideAt(Math.pow(10, xDomain[1])))) + 4,
           "O(1/n)", { size: 11, fill: "#777777" });

  // series
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const coords = s.points
      .filter((p) => p.mse > 0)
      .map((p): [number, number] => [x(lx(p.n)), y(ly(p.mse))]);
    doc.polyline(coords, color, `series series-${s.method}`);
    for (const [cx, cy] of coords) {
      doc.circle(cx, cy, 3, color, `marker-${s.method}`);
    }
    const legendY = MARGIN.top + 16 + 20 * i;
    doc.line(WIDTH - MARGIN.right + 10, legendY - 4,
             WIDTH - MARGIN.right + 34, legendY - 4, color, 2);
    doc.text(WIDTH - MARGIN.right + 40, legendY, s.method, { size: 12 });
  });
  return doc.render();
}
