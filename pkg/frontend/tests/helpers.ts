// Fixture-backed fetch: the tests exercise the dashboard against recorded
// platform responses, never against live computation.

import { readFileSync } from "node:fs";
import { join } from "node:path";

import { PlatformClient } from "../src/api.js";

const FIXTURES = join(__dirname, "fixtures");

export interface Fixture {
  status: number;
  body: unknown;
}

export function loadFixture(name: string): Fixture {
  return JSON.parse(readFileSync(join(FIXTURES, `${name}.json`), "utf-8")) as Fixture;
}

export const PSEUDONYM: string = (
  JSON.parse(readFileSync(join(FIXTURES, "meta.json"), "utf-8")) as { pseudonym: string }
).pseudonym;

type RouteTable = Record<string, Fixture>;

export function fakeFetch(routes: RouteTable): {
  fetch: (url: string, init?: RequestInit) => Promise<Response>;
  calls: { url: string; method: string; body?: unknown }[];
} {
  const calls: { url: string; method: string; body?: unknown }[] = [];
  const impl = async (url: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? "GET";
    calls.push({
      url,
      method,
      body: init?.body ? JSON.parse(init.body as string) : undefined,
    });
    for (const [route, fixture] of Object.entries(routes)) {
      const [routeMethod, routePath] = route.split(" ");
      if (method === routeMethod && url.includes(routePath)) {
        return new Response(JSON.stringify(fixture.body), {
          status: fixture.status,
          headers: { "Content-Type": "application/json" },
        });
      }
    }
    return new Response(JSON.stringify({ error: { code: "unrouted", detail: url } }), {
      status: 500,
    });
  };
  return { fetch: impl, calls };
}

export function clientWith(routes: RouteTable) {
  const { fetch, calls } = fakeFetch(routes);
  return { client: new PlatformClient("http://platform.test", "tok-test", fetch), calls };
}

export const CHANGED_FEATURES = [
  "lunch_cooking_peaks",
  "lunchtime_outings",
  "sleep_deep_min",
  "sleep_rem_min",
] as const;

export const EXPECTED_DIRECTION: Record<(typeof CHANGED_FEATURES)[number], string> = {
  lunch_cooking_peaks: "decrease",
  lunchtime_outings: "increase",
  sleep_deep_min: "decrease",
  sleep_rem_min: "increase",
};
