// Canvas scatter of metric-vs-alpha points accumulated this session:
// PSNR on the left axis, perceptual distance on the right.

import type { HistoryPoint } from "../state.js";

const W = 360;
const H = 200;
const PAD = 34;

export interface MetricChart {
  root: HTMLElement;
  render(points: readonly HistoryPoint[]): void;
}

function span(values: number[]): [number, number] {
  if (values.length === 0) return [0, 1];
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  return lo === hi ? [lo - 0.5, hi + 0.5] : [lo, hi];
}

export function createChart(doc: Document): MetricChart {
  const root = doc.createElement("div");
  root.className = "chart";
  const canvas = doc.createElement("canvas");
  canvas.width = W;
  canvas.height = H;
  const caption = doc.createElement("div");
  caption.className = "chart-caption";
  caption.textContent = "fidelity (PSNR ●) and perceptual distance (▲) vs α";
  root.append(canvas, caption);

  function render(points: readonly HistoryPoint[]): void {
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    ctx.clearRect(0, 0, W, H);
    ctx.strokeStyle = "#888";
    ctx.strokeRect(PAD, 8, W - PAD - 8, H - PAD - 8);
    if (points.length === 0) return;

    const xs = (a: number) => PAD + a * (W - PAD - 8 - 2) + 1;
    const [plo, phi] = span(points.map((p) => p.metrics.psnr));
    const [llo, lhi] = span(points.map((p) => p.metrics.lpips_proxy));
    const yPsnr = (v: number) => H - PAD - ((v - plo) / (phi - plo)) * (H - PAD - 10);
    const yLpips = (v: number) => H - PAD - ((v - llo) / (lhi - llo)) * (H - PAD - 10);

    ctx.fillStyle = "#2a6fdb";
    for (const p of points) {
      ctx.beginPath();
      ctx.arc(xs(p.alpha), yPsnr(p.metrics.psnr), 3, 0, 2 * Math.PI);
      ctx.fill();
    }
    ctx.fillStyle = "#d2622a";
    for (const p of points) {
      const x = xs(p.alpha);
      const y = yLpips(p.metrics.lpips_proxy);
      ctx.beginPath();
      ctx.moveTo(x, y - 4);
      ctx.lineTo(x - 4, y + 3);
      ctx.lineTo(x + 4, y + 3);
      ctx.closePath();
      ctx.fill();
    }
    ctx.fillStyle = "#444";
    ctx.font = "10px sans-serif";
    ctx.fillText("0", PAD - 4, H - PAD + 12);
    ctx.fillText("α=1", W - 26, H - PAD + 12);
  }

  return { root, render };
}
