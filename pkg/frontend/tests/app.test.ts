import { describe, expect, it } from "vitest";

import type { ChangeReport, ResultsResponse } from "../src/api.js";
import { parseReports } from "../src/api.js";
import { reportCard, rosterList } from "../src/app.js";
import { validateThresholds, isDefaultThresholds, DEFAULT_THRESHOLDS } from "../src/session.js";
import { CHANGED_FEATURES, loadFixture } from "./helpers.js";

const results = loadFixture("results").body as ResultsResponse;
const reports: ChangeReport[] = parseReports(results);

describe("report rendering", () => {
  it("stored run carries all four expected feature changes", () => {
    const byFeature = new Map(reports.map((r) => [r.feature, r]));
    expect(byFeature.get("lunch_cooking_peaks")?.direction).toBe("decrease");
    expect(byFeature.get("lunchtime_outings")?.direction).toBe("increase");
    expect(byFeature.get("sleep_deep_min")?.direction).toBe("decrease");
    expect(byFeature.get("sleep_rem_min")?.direction).toBe("increase");
  });

  it("report cards show the explanation and attribution verbatim", () => {
    for (const feature of CHANGED_FEATURES) {
      const report = reports.find((r) => r.feature === feature)!;
      const html = reportCard(report);
      expect(html).toContain(report.direction);
      expect(html).toContain(report.start);
      // the explanation text is the platform's, injected without rewriting
      const stripped = report.explanation.replace(/&/g, "&amp;").replace(/</g, "&lt;");
      expect(html).toContain(stripped.slice(0, 40));
    }
  });

  it("escapes html in feature names", () => {
    const nasty = { ...reports[0], feature: "<script>x</script>" };
    const html = reportCard(nasty as ChangeReport);
    expect(html).not.toContain("<script>x");
    expect(html).toContain("&lt;script&gt;");
  });

  it("roster renders one button per pseudonym", () => {
    const { pseudonyms } = loadFixture("subjects").body as { pseudonyms: string[] };
    const html = rosterList(pseudonyms);
    expect(html.match(/button class="subject"/g)!.length).toBe(pseudonyms.length);
    for (const p of pseudonyms) {
      expect(html).toContain(`data-pseudonym="${p}"`);
    }
  });
});

describe("threshold form rules", () => {
  it("accepts the defaults", () => {
    expect(validateThresholds({ ...DEFAULT_THRESHOLDS })).toEqual([]);
    expect(isDefaultThresholds({ ...DEFAULT_THRESHOLDS })).toBe(true);
  });

  it("flags out-of-range values per field", () => {
    const issues = validateThresholds({ alpha: 1.5, effect_min: -1, persistence: 0, window_days: 1 });
    expect(issues.map((i) => i.field).sort()).toEqual(
      ["alpha", "effect_min", "persistence", "window_days"],
    );
  });

  it("detects overrides", () => {
    expect(isDefaultThresholds({ ...DEFAULT_THRESHOLDS, persistence: 5 })).toBe(false);
  });
});
