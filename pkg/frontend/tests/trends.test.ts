import { describe, expect, it } from "vitest";

import type { SeriesResponse } from "../src/api.js";
import { buildChartModel, renderTrendSvg } from "../src/trends.js";
import { CHANGED_FEATURES, EXPECTED_DIRECTION, loadFixture } from "./helpers.js";

describe("trend charts from recorded series", () => {
  for (const feature of CHANGED_FEATURES) {
    it(`renders ${feature} with a shaded change window`, () => {
      const series = loadFixture(`series_${feature}`).body as SeriesResponse;
      const model = buildChartModel(series);

      // every displayed number is the API's number, verbatim
      expect(model.values).toEqual(series.values);
      expect(model.rolling).toEqual(series.rolling_median);
      expect(model.dates).toEqual(series.dates);

      expect(series.windows.length).toBeGreaterThan(0);
      expect(model.spans.length).toBeGreaterThan(0);
      expect(model.spans.some((s) => s.direction === EXPECTED_DIRECTION[feature])).toBe(true);

      const svg = renderTrendSvg(model);
      expect(svg).toContain('class="change-window');  // plain or seasonal variant
      expect(svg).toContain('class="daily"');
      expect(svg).toContain('class="rolling"');
    });
  }

  it("maps window dates onto the visible index range", () => {
    const series = loadFixture("series_sleep_deep_min").body as SeriesResponse;
    const model = buildChartModel(series);
    for (const span of model.spans) {
      const w = series.windows.find((win) => series.dates[span.startIndex] === win.start);
      expect(w).toBeDefined();
      expect(span.startIndex).toBeLessThan(span.endIndex);
      expect(span.endIndex).toBeLessThanOrEqual(series.dates.length);
    }
  });

  it("breaks the line at missing days instead of drawing zeros", () => {
    const series: SeriesResponse = {
      feature: "steps",
      dates: ["2026-01-01", "2026-01-02", "2026-01-03", "2026-01-04"],
      values: [10, null, 30, 40],
      rolling_median: [10, 10, 20, 30],
      windows: [],
    };
    const svg = renderTrendSvg(buildChartModel(series));
    const dailyPath = svg.match(/class="daily" d="([^"]*)"/)![1];
    // two pen-down segments: the null day lifts the pen
    expect(dailyPath.match(/M/g)!.length).toBe(2);
    expect(dailyPath).not.toContain("NaN");
  });

  it("shows an empty state when every day is missing", () => {
    const series: SeriesResponse = {
      feature: "toothbrush_sessions",
      dates: ["2026-01-01", "2026-01-02"],
      values: [null, null],
      rolling_median: [null, null],
      windows: [],
    };
    const model = buildChartModel(series);
    expect(model.allMissing).toBe(true);
    const svg = renderTrendSvg(model);
    expect(svg).toContain("empty-state");
    expect(svg).toContain("no data recorded");
    expect(svg).not.toContain('class="daily"');
  });

  it("marks seasonal windows distinctly", () => {
    const series: SeriesResponse = {
      feature: "outings",
      dates: ["2026-07-01", "2026-07-02", "2026-07-03"],
      values: [1, 2, 3],
      rolling_median: [1, 1, 2],
      windows: [
        { start: "2026-07-01", end: "2026-07-03", direction: "increase", seasonal_confound: true },
      ],
    };
    const svg = renderTrendSvg(buildChartModel(series));
    expect(svg).toContain("change-window seasonal");
  });
});
