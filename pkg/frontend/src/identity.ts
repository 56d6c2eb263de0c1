// Access-controlled re-identification panel. The request is made only for
// clinician sessions; every resolve call is audited server-side either way.

import { PlatformApiError, PlatformClient } from "./api.js";
import { DashboardSession, canRevealIdentity } from "./session.js";

export type IdentityPanel =
  | { state: "hidden" }
  | { state: "revealed"; name: string; homeId: string; auditNote: string }
  | { state: "denied"; message: string }
  | { state: "not-found"; message: string };

export async function revealIdentity(
  client: PlatformClient,
  session: DashboardSession,
  pseudonym: string,
): Promise<IdentityPanel> {
  if (!canRevealIdentity(session)) {
    return { state: "denied", message: "Re-identification requires the clinician role." };
  }
  try {
    const identity = await client.resolveIdentity(pseudonym);
    return {
      state: "revealed",
      name: identity.name,
      homeId: identity.home_id,
      auditNote: "This access has been recorded in the re-identification audit log.",
    };
  } catch (err) {
    if (err instanceof PlatformApiError && err.status === 403) {
      return { state: "denied", message: "Your role is not permitted to view identities." };
    }
    if (err instanceof PlatformApiError && err.status === 404) {
      return { state: "not-found", message: `No subject is registered under ${pseudonym}.` };
    }
    throw err;
  }
}
