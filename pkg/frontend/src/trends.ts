// Trend-chart model and SVG rendering.
//
// The chart model is a verbatim re-indexing of the /series response: daily
// values, the server-computed rolling median, and the stored change windows
// as shaded spans. Missing days break the line path (a gap, never a zero).

import type { SeriesResponse } from "./api.js";

export interface ChartSpan {
  startIndex: number;
  endIndex: number; // exclusive
  direction: string;
  seasonal: boolean;
}

export interface ChartModel {
  feature: string;
  dates: string[];
  values: (number | null)[];
  rolling: (number | null)[];
  spans: ChartSpan[];
  allMissing: boolean;
  yMin: number;
  yMax: number;
}

export function buildChartModel(series: SeriesResponse): ChartModel {
  const present = series.values.filter((v): v is number => v !== null);
  const rollingPresent = series.rolling_median.filter((v): v is number => v !== null);
  const all = present.concat(rollingPresent);
  const yMin = all.length ? Math.min(...all) : 0;
  const yMax = all.length ? Math.max(...all) : 1;
  const index = new Map(series.dates.map((d, i) => [d, i]));
  const spans: ChartSpan[] = [];
  for (const w of series.windows) {
    // a window may start or end outside the visible range; clamp to it
    let start = index.get(w.start);
    if (start === undefined) {
      start = w.start < series.dates[0] ? 0 : series.dates.length;
    }
    let end = index.get(w.end);
    if (end === undefined) {
      end = w.end > series.dates[series.dates.length - 1] ? series.dates.length : 0;
    }
    if (start < end) {
      spans.push({
        startIndex: start,
        endIndex: end,
        direction: w.direction,
        seasonal: w.seasonal_confound,
      });
    }
  }
  return {
    feature: series.feature,
    dates: series.dates,
    values: series.values,
    rolling: series.rolling_median,
    spans,
    allMissing: present.length === 0,
    yMin,
    yMax,
  };
}

const W = 720;
const H = 180;
const PAD = 28;

function x(i: number, n: number): number {
  return PAD + (i / Math.max(n - 1, 1)) * (W - 2 * PAD);
}

function y(v: number, m: ChartModel): number {
  const span = m.yMax - m.yMin || 1;
  return H - PAD - ((v - m.yMin) / span) * (H - 2 * PAD);
}

function linePath(values: (number | null)[], m: ChartModel): string {
  const parts: string[] = [];
  let pen = false;
  values.forEach((v, i) => {
    if (v === null) {
      pen = false; // missing day: lift the pen, do not draw zero
      return;
    }
    parts.push(`${pen ? "L" : "M"}${x(i, values.length).toFixed(1)},${y(v, m).toFixed(1)}`);
    pen = true;
  });
  return parts.join(" ");
}

export function renderTrendSvg(m: ChartModel): string {
  if (m.allMissing) {
    return (
      `<svg class="trend" viewBox="0 0 ${W} ${H}" role="img">` +
      `<text class="empty-state" x="${W / 2}" y="${H / 2}" text-anchor="middle">` +
      `no data recorded for ${escapeHtml(m.feature)}</text></svg>`
    );
  }
  const n = m.dates.length;
  const shading = m.spans
    .map((s) => {
      const x0 = x(s.startIndex, n);
      const x1 = x(Math.max(s.endIndex - 1, s.startIndex), n);
      const cls = s.seasonal ? "change-window seasonal" : "change-window";
      return `<rect class="${cls}" data-direction="${s.direction}" x="${x0.toFixed(1)}" y="${PAD}" width="${(x1 - x0).toFixed(1)}" height="${H - 2 * PAD}"/>`;
    })
    .join("");
  return (
    `<svg class="trend" viewBox="0 0 ${W} ${H}" role="img" aria-label="${escapeHtml(m.feature)}">` +
    shading +
    `<path class="daily" d="${linePath(m.values, m)}"/>` +
    `<path class="rolling" d="${linePath(m.rolling, m)}"/>` +
    `</svg>`
  );
}

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}
