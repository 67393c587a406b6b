/** Deterministic SVG building blocks with a fixed style. */

export const WIDTH = 720;
export const HEIGHT = 480;
export const MARGIN = { top: 40, right: 170, bottom: 55, left: 75 };

export const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd",
  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

/** Fixed-precision coordinate formatting so output is byte-stable. */
export function fmt(v: number): string {
  const s = v.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
}

export function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export interface Scale {
  (v: number): number;
  domain: [number, number];
}

/** Linear mapping from domain to pixel range. */
export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const scale = ((v: number) => r0 + ((v - d0) / span) * (r1 - r0)) as Scale;
  scale.domain = domain;
  return scale;
}

/** Powers of 10 covering [lo, hi] in log10 space, for log-axis ticks. */
export function decadeTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  for (let e = Math.ceil(lo - 1e-9); e <= Math.floor(hi + 1e-9); e += 1) {
    ticks.push(e);
  }
  return ticks.length >= 2 ? ticks : [Math.floor(lo), Math.ceil(hi)];
}

export function powerLabel(exp: number): string {
  return `1e${exp}`;
}

export class SvgDoc {
  private parts: string[] = [];

  constructor(width = WIDTH, height = HEIGHT) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`);
    this.parts.push(`<rect width="${width}" height="${height}" fill="#ffffff"/>`);
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string,
       width = 1, dash?: string): void {
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ` +
      `stroke="${stroke}" stroke-width="${width}"${d}/>`);
  }

  polyline(points: Array<[number, number]>, stroke: string, cls: string,
           dash?: string): void {
    const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    const d = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<polyline class="${cls}" points="${pts}" fill="none" ` +
      `stroke="${stroke}" stroke-width="2"${d}/>`);
  }

  circle(cx: number, cy: number, r: number, fill: string, cls?: string): void {
    const c = cls ? ` class="${cls}"` : "";
    this.parts.push(
      `<circle${c} cx="${fmt(cx)}" cy="${fmt(cy)}" r="${r}" fill="${fill}"/>`);
  }

  rect(x: number, y: number, w: number, h: number, fill: string, cls?: string): void {
    const c = cls ? ` class="${cls}"` : "";
    this.parts.push(
      `<rect${c} x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" ` +
      `fill="${fill}"/>`);
  }

  text(x: number, y: number, content: string, opts: {
    size?: number; anchor?: string; fill?: string; rotate?: boolean;
  } = {}): void {
    const size = opts.size ?? 12;
    const anchor = opts.anchor ?? "start";
    const fill = opts.fill ?? "#000000";
    const transform = opts.rotate
      ? ` transform="rotate(-90 ${fmt(x)} ${fmt(y)})"` : "";
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" font-size="${size}" ` +
      `text-anchor="${anchor}" fill="${fill}"${transform}>${escapeXml(content)}</text>`);
  }

  render(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}
