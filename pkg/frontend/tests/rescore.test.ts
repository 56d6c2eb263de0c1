import { describe, expect, it } from "vitest";

import type { ChangeReport, RescoreResponse, ResultsResponse } from "../src/api.js";
import { parseReports } from "../src/api.js";
import { flaggedSpans, sameSpans, spansOfReports, whatIfRescore } from "../src/rescore.js";
import { DEFAULT_THRESHOLDS } from "../src/session.js";
import { CHANGED_FEATURES, PSEUDONYM, clientWith, loadFixture } from "./helpers.js";

const results = loadFixture("results").body as ResultsResponse;
const storedReports: ChangeReport[] = parseReports(results);

describe("what-if re-scoring", () => {
  it("default thresholds reproduce the stored flags exactly", async () => {
    const { client } = clientWith({ "POST /api/rescore": loadFixture("rescore_default") });
    const outcome = await whatIfRescore(client, PSEUDONYM, { ...DEFAULT_THRESHOLDS });
    expect(outcome.issues).toEqual([]);
    const recomputed = spansOfReports(outcome.response!.reports);
    const stored = spansOfReports(storedReports);
    expect(sameSpans(recomputed, stored)).toBe(true);
  });

  it("never mutates stored reports (reload returns the same version)", () => {
    const after = loadFixture("results_after_rescore").body as ResultsResponse;
    expect(after.version).toBe(results.version);
    expect(after.latest).toBe(results.latest);
    expect(after.reports).toBe(results.reports);
    expect(after.features).toBe(results.features);
  });

  it("raising persistence until reports vanish clears the shading", async () => {
    const strict = loadFixture("rescore_strict").body as RescoreResponse;
    expect(strict.reports).toEqual([]);
    const spans = spansOfReports(strict.reports);
    expect(spans).toEqual([]);
    // the stored view is untouched regardless
    expect(storedReports.length).toBeGreaterThan(0);
  });

  it("rejects invalid thresholds locally with an inline error", async () => {
    const { client, calls } = clientWith({});
    const outcome = await whatIfRescore(client, PSEUDONYM, {
      ...DEFAULT_THRESHOLDS,
      alpha: 1.5,
    });
    expect(outcome.response).toBeNull();
    expect(outcome.issues.map((i) => i.field)).toContain("alpha");
    expect(calls).toEqual([]); // nothing sent for an invalid request
  });

  it("covers all four changed features in the default rescore", async () => {
    const def = loadFixture("rescore_default").body as RescoreResponse;
    const reported = new Set(def.reports.map((r) => r.feature));
    for (const feature of CHANGED_FEATURES) {
      expect(reported.has(feature)).toBe(true);
    }
  });

  it("merges consecutive flagged windows into display spans", () => {
    const flags = {
      f: [
        { start: "2026-06-01", end: "2026-06-29", flagged: true, direction: "increase", effect: 1, p_value: 0.001 },
        { start: "2026-06-08", end: "2026-07-06", flagged: true, direction: "increase", effect: 1, p_value: 0.001 },
        { start: "2026-06-15", end: "2026-07-13", flagged: false, direction: "", effect: 0, p_value: 0.5 },
        { start: "2026-06-22", end: "2026-07-20", flagged: true, direction: "decrease", effect: -1, p_value: 0.001 },
      ],
    };
    const spans = flaggedSpans(flags);
    expect(spans).toEqual([
      { feature: "f", start: "2026-06-01", end: "2026-07-06", direction: "increase" },
      { feature: "f", start: "2026-06-22", end: "2026-07-20", direction: "decrease" },
    ]);
  });
});
