// What-if re-scoring: send threshold overrides to the platform's rescore
// endpoint and swap the chart shading for the recomputed flags. Stored
// reports are never touched; reloading always returns to the stored view.

import type { PlatformClient, RescoreResponse, WindowFlag } from "./api.js";
import { ThresholdOverrides, validateThresholds } from "./session.js";

export interface RescoredSpan {
  feature: string;
  start: string;
  end: string;
  direction: string;
}

export function flaggedSpans(flags: Record<string, WindowFlag[]>): RescoredSpan[] {
  // merge consecutive flagged windows of one direction into display spans,
  // mirroring how stored reports span their first-to-last flagged window
  const spans: RescoredSpan[] = [];
  for (const [feature, windows] of Object.entries(flags)) {
    let current: RescoredSpan | null = null;
    let prevEnd: string | null = null;
    for (const w of windows) {
      if (w.flagged && current && w.direction === current.direction && prevEnd !== null && w.start <= prevEnd) {
        current.end = w.end;
      } else if (w.flagged) {
        if (current) spans.push(current);
        current = { feature, start: w.start, end: w.end, direction: w.direction };
      } else {
        if (current) spans.push(current);
        current = null;
      }
      prevEnd = w.end;
    }
    if (current) spans.push(current);
  }
  return spans;
}

export interface WhatIfOutcome {
  response: RescoreResponse | null;
  issues: { field: string; message: string }[];
}

export async function whatIfRescore(
  client: PlatformClient,
  pseudonym: string,
  overrides: ThresholdOverrides,
): Promise<WhatIfOutcome> {
  const issues = validateThresholds(overrides);
  if (issues.length) {
    return { response: null, issues };
  }
  const response = await client.rescore(pseudonym, { ...overrides });
  return { response, issues: [] };
}

export function spansOfReports(
  reports: { feature: string; start: string; end: string; direction: string }[],
): RescoredSpan[] {
  return reports.map((r) => ({
    feature: r.feature,
    start: r.start,
    end: r.end,
    direction: r.direction,
  }));
}

export function sameSpans(a: RescoredSpan[], b: RescoredSpan[]): boolean {
  const key = (s: RescoredSpan) => `${s.feature}|${s.start}|${s.end}|${s.direction}`;
  const ka = a.map(key).sort();
  const kb = b.map(key).sort();
  return ka.length === kb.length && ka.every((k, i) => k === kb[i]);
}
