// Dashboard wiring: roster -> subject view (reports + trend charts) ->
// what-if panel -> identity panel. All rendering is string-based; this file
// only glues fetched data into the page.

import { ChangeReport, PlatformClient, parseReports } from "./api.js";
import { revealIdentity } from "./identity.js";
import { flaggedSpans, sameSpans, spansOfReports, whatIfRescore } from "./rescore.js";
import { DashboardSession, newSession, canRevealIdentity } from "./session.js";
import { buildChartModel, escapeHtml, renderTrendSvg } from "./trends.js";

export function reportCard(r: ChangeReport): string {
  const seasonal = r.seasonal_confound
    ? `<span class="badge seasonal">possible seasonal effect</span>`
    : "";
  const contributions = r.contributing
    .map(([f, a]) => `${escapeHtml(f)} ${(a * 100).toFixed(0)}%`)
    .join(", ");
  return (
    `<article class="report" data-feature="${escapeHtml(r.feature)}">` +
    `<h3>${escapeHtml(r.feature)} <span class="dir ${r.direction}">${r.direction}</span> ${seasonal}</h3>` +
    `<p class="window">${r.start} → ${r.end} &middot; ${r.persistence} consecutive windows &middot; ` +
    `effect ${r.effect_size.toFixed(2)} &middot; p=${r.p_value.toExponential(1)}</p>` +
    `<p class="explanation">${escapeHtml(r.explanation)}</p>` +
    `<p class="attribution">attribution: ${contributions}</p>` +
    `</article>`
  );
}

export function rosterList(pseudonyms: string[]): string {
  const items = pseudonyms
    .map((p) => `<li><button class="subject" data-pseudonym="${p}">${p.slice(0, 12)}…</button></li>`)
    .join("");
  return `<ul class="roster">${items}</ul>`;
}

export class Dashboard {
  session: DashboardSession;
  private storedReports: ChangeReport[] = [];

  constructor(
    private client: PlatformClient,
    role: "clinician" | "analyst",
    private root: Document = document,
  ) {
    this.session = newSession(role);
  }

  private el(id: string): HTMLElement {
    const node = this.root.getElementById(id);
    if (!node) throw new Error(`missing #${id}`);
    return node;
  }

  async showRoster(): Promise<void> {
    const { pseudonyms } = await this.client.subjects();
    this.el("roster").innerHTML = rosterList(pseudonyms);
    this.el("identity-panel").hidden = !canRevealIdentity(this.session);
  }

  async openSubject(pseudonym: string): Promise<void> {
    this.session.pseudonym = pseudonym;
    const results = await this.client.results(pseudonym);
    this.storedReports = parseReports(results);
    this.el("reports").innerHTML = this.storedReports.map(reportCard).join("");
    const features = [...new Set(this.storedReports.map((r) => r.feature))];
    const charts: string[] = [];
    for (const feature of features) {
      const series = await this.client.series(
        pseudonym,
        feature,
        this.session.from ?? undefined,
        this.session.to ?? undefined,
      );
      charts.push(`<figure><figcaption>${escapeHtml(feature)}</figcaption>${renderTrendSvg(buildChartModel(series))}</figure>`);
    }
    this.el("trends").innerHTML = charts.join("");
  }

  async applyWhatIf(): Promise<void> {
    if (!this.session.pseudonym) return;
    const outcome = await whatIfRescore(this.client, this.session.pseudonym, this.session.overrides);
    const status = this.el("whatif-status");
    if (!outcome.response) {
      status.innerHTML = outcome.issues
        .map((i) => `<p class="error">invalid-thresholds: ${escapeHtml(i.message)}</p>`)
        .join("");
      return;
    }
    const recomputed = spansOfReports(outcome.response.reports);
    const stored = spansOfReports(this.storedReports);
    status.textContent = sameSpans(recomputed, stored)
      ? "what-if flags match the stored reports"
      : `${recomputed.length} span(s) under the what-if thresholds (stored reports unchanged)`;
    this.el("whatif-spans").textContent = JSON.stringify(
      flaggedSpans(outcome.response.flags).slice(0, 50),
    );
  }

  async reveal(): Promise<void> {
    if (!this.session.pseudonym) return;
    const panel = await revealIdentity(this.client, this.session, this.session.pseudonym);
    const node = this.el("identity-panel");
    if (panel.state === "revealed") {
      node.innerHTML =
        `<p class="identity">${escapeHtml(panel.name)} (${escapeHtml(panel.homeId)})</p>` +
        `<p class="audit-note">${escapeHtml(panel.auditNote)}</p>`;
    } else if (panel.state === "denied") {
      node.innerHTML = `<p class="denied">${escapeHtml(panel.message)}</p>`;
    } else if (panel.state === "not-found") {
      node.innerHTML = `<p class="not-found">${escapeHtml(panel.message)}</p>`;
    }
  }
}

export function boot(): void {
  const params = new URLSearchParams(window.location.search);
  const endpoint = params.get("endpoint") ?? "";
  const token = params.get("token") ?? "";
  const role = (params.get("role") ?? "analyst") as "clinician" | "analyst";
  const client = new PlatformClient(endpoint, token);
  const app = new Dashboard(client, role);
  void app.showRoster();
  document.addEventListener("click", (ev) => {
    const target = ev.target as HTMLElement;
    if (target.matches("button.subject")) {
      void app.openSubject(target.dataset.pseudonym!);
    } else if (target.id === "whatif-apply") {
      for (const key of ["alpha", "effect_min", "persistence", "window_days"] as const) {
        const input = document.getElementById(`t-${key}`) as HTMLInputElement | null;
        if (input) app.session.overrides[key] = Number(input.value);
      }
      void app.applyWhatIf();
    } else if (target.id === "reveal-identity") {
      void app.reveal();
    }
  });
}

if (typeof window !== "undefined" && typeof document !== "undefined" && document.getElementById("roster")) {
  boot();
}
