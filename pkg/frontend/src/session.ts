// Client-side session state: role, selected subject, date range, and the
// what-if threshold overrides. The identity affordance exists only for the
// clinician role; nothing identified is ever persisted client-side.

export type SessionRole = "clinician" | "analyst";

export interface ThresholdOverrides {
  alpha: number;
  effect_min: number;
  persistence: number;
  window_days: number;
}

export const DEFAULT_THRESHOLDS: ThresholdOverrides = {
  alpha: 0.01,
  effect_min: 1.0,
  persistence: 3,
  window_days: 28,
};

export interface DashboardSession {
  role: SessionRole;
  pseudonym: string | null;
  from: string | null;
  to: string | null;
  overrides: ThresholdOverrides;
}

export function newSession(role: SessionRole): DashboardSession {
  return { role, pseudonym: null, from: null, to: null, overrides: { ...DEFAULT_THRESHOLDS } };
}

export function canRevealIdentity(session: DashboardSession): boolean {
  return session.role === "clinician";
}

export interface ThresholdIssue {
  field: keyof ThresholdOverrides;
  message: string;
}

export function validateThresholds(t: ThresholdOverrides): ThresholdIssue[] {
  const issues: ThresholdIssue[] = [];
  if (!(t.alpha > 0 && t.alpha <= 1)) {
    issues.push({ field: "alpha", message: "alpha must be in (0, 1]" });
  }
  if (!(t.effect_min >= 0)) {
    issues.push({ field: "effect_min", message: "effect threshold must be >= 0" });
  }
  if (!Number.isInteger(t.persistence) || t.persistence < 1) {
    issues.push({ field: "persistence", message: "persistence must be a positive integer" });
  }
  if (!Number.isInteger(t.window_days) || t.window_days < 2) {
    issues.push({ field: "window_days", message: "window must be at least 2 days" });
  }
  return issues;
}

export function isDefaultThresholds(t: ThresholdOverrides): boolean {
  return (Object.keys(DEFAULT_THRESHOLDS) as (keyof ThresholdOverrides)[]).every(
    (k) => t[k] === DEFAULT_THRESHOLDS[k],
  );
}
