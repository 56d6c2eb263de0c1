import { describe, expect, it } from "vitest";

import { revealIdentity } from "../src/identity.js";
import { canRevealIdentity, newSession } from "../src/session.js";
import { PSEUDONYM, clientWith, loadFixture } from "./helpers.js";

describe("access-controlled re-identification", () => {
  it("clinician reveal succeeds and shows the audit note", async () => {
    const { client } = clientWith({ "POST /api/resolve": loadFixture("resolve_clinician") });
    const panel = await revealIdentity(client, newSession("clinician"), PSEUDONYM);
    expect(panel.state).toBe("revealed");
    if (panel.state === "revealed") {
      expect(panel.homeId).toBe("home-001");
      expect(panel.name.length).toBeGreaterThan(0);
      expect(panel.auditNote).toContain("audit");
    }
  });

  it("analyst reveal is denied by the platform", async () => {
    // even if the affordance were forced, the platform says no
    const { client } = clientWith({ "POST /api/resolve": loadFixture("resolve_analyst") });
    const session = { ...newSession("analyst"), role: "clinician" as const };
    const panel = await revealIdentity(client, session, PSEUDONYM);
    expect(panel.state).toBe("denied");
  });

  it("analyst sessions never issue the request at all", async () => {
    const { client, calls } = clientWith({});
    const panel = await revealIdentity(client, newSession("analyst"), PSEUDONYM);
    expect(panel.state).toBe("denied");
    expect(calls).toEqual([]);
    expect(canRevealIdentity(newSession("analyst"))).toBe(false);
    expect(canRevealIdentity(newSession("clinician"))).toBe(true);
  });

  it("unknown pseudonym maps to a not-found panel", async () => {
    const { client } = clientWith({ "POST /api/resolve": loadFixture("resolve_unknown") });
    const panel = await revealIdentity(client, newSession("clinician"), "f".repeat(32));
    expect(panel.state).toBe("not-found");
  });
});
