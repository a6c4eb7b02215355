// Console wiring: connect to a trial, poll the event feed, and route
// service responses into the render components. No optimistic updates:
// panels change only after the service confirms.

import { ApiError, TrialApi } from "./api.js";
import { renderEventFeed } from "./components/eventFeed.js";
import { renderEnrollForm, renderOutcomeForm } from "./components/forms.js";
import { renderPartitionTree } from "./components/partitionTree.js";
import { renderRecommendation } from "./components/recommendation.js";
import { renderWhatIf } from "./components/whatif.js";
import { el, stopReasonLabel } from "./format.js";
import { ConsoleSession } from "./session.js";
import type { PartitionView, TrialStateView } from "./types.js";

const POLL_MS = 2500;

function byId(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

function toast(message: string, kind: "error" | "info", retry?: () => void): void {
  const host = byId("toasts");
  const box = el("div", `toast ${kind}`);
  box.appendChild(el("span", undefined, message));
  if (retry) {
    const btn = el("button", "retry", "Retry");
    btn.addEventListener("click", () => {
      box.remove();
      retry();
    });
    box.appendChild(btn);
  }
  host.appendChild(box);
  if (!retry) setTimeout(() => box.remove(), 6000);
}

class Console {
  private api: TrialApi;
  private session: ConsoleSession;
  private timer: number | undefined;

  constructor(baseUrl: string, trialId: string) {
    this.api = new TrialApi(baseUrl, trialId);
    this.session = new ConsoleSession(trialId);
  }

  async start(): Promise<void> {
    await this.refreshState();
    await this.poll();
    this.timer = window.setInterval(() => void this.poll(), POLL_MS);
    byId("trial-banner").textContent = `trial ${this.session.trialId}`;
  }

  stopPolling(): void {
    if (this.timer !== undefined) window.clearInterval(this.timer);
  }

  private async refreshState(): Promise<void> {
    const state = await this.api.state();
    this.session.absorbState(state);
    this.renderStatus(state);
    renderEnrollForm(byId("enroll"), state, (x) => void this.enroll(x));
    renderOutcomeForm(byId("outcome"), state, (pid, y) =>
      void this.recordOutcome(pid, y),
    );
    this.wireWhatIf(state);
    await this.refreshPartition(state);
  }

  private renderStatus(state: TrialStateView): void {
    const host = byId("status");
    host.replaceChildren();
    const panel = el("div", "panel status");
    panel.appendChild(el("h3", undefined, "Trial status"));
    const badge = el("span", `badge phase-${state.phase}`);
    badge.textContent =
      state.phase === "stopped"
        ? stopReasonLabel(state.stop_reason)
        : state.phase === "run_in"
          ? `Run-in (${state.n_enrolled}/${state.n_runin})`
          : "Adaptive";
    panel.appendChild(badge);
    panel.appendChild(
      el(
        "p",
        undefined,
        `${state.n_enrolled}/${state.n_max} enrolled, ${state.n_observed} outcomes`,
      ),
    );
    panel.appendChild(
      el("p", undefined, `active arms: ${state.active_arms.join(", ")}`),
    );
    for (const drop of state.drops) {
      panel.appendChild(
        el(
          "p",
          "warning",
          `arm ${drop.arm} dropped after ${drop.at_observed} outcomes`,
        ),
      );
    }
    host.appendChild(panel);
  }

  private async refreshPartition(state: TrialStateView): Promise<void> {
    let view: PartitionView | null = null;
    if (state.n_observed > 0) {
      try {
        view = await this.api.partition();
      } catch (err) {
        if (!(err instanceof ApiError && err.status === 409)) throw err;
      }
    }
    renderPartitionTree(byId("partition"), view);
  }

  private wireWhatIf(state: TrialStateView): void {
    const host = byId("whatif-form");
    host.replaceChildren();
    const form = el("form", "panel whatif-form");
    form.appendChild(el("h3", undefined, "What-if (no enrollment)"));
    const inputs: HTMLInputElement[] = [];
    for (const label of state.marker_labels) {
      const row = el("label", "field");
      row.appendChild(el("span", "field-label", label));
      const input = el("input", "field-input");
      input.type = "number";
      input.step = "any";
      input.required = true;
      inputs.push(input);
      row.appendChild(input);
      form.appendChild(row);
    }
    const submit = el("button", "secondary", "Query");
    submit.type = "submit";
    form.appendChild(submit);
    form.addEventListener("submit", (evt) => {
      evt.preventDefault();
      if (inputs.some((i) => i.value.trim() === "")) return;
      const x = inputs.map((i) => Number(i.value));
      void this.whatIf(x, state);
    });
    host.appendChild(form);
  }

  private async whatIf(x: number[], state: TrialStateView): Promise<void> {
    try {
      const view = await this.api.predictive(x);
      renderWhatIf(byId("whatif"), view, x, state.biomarker_ranges);
    } catch (err) {
      this.report(err, () => void this.whatIf(x, state));
    }
  }

  private async enroll(biomarkers: number[]): Promise<void> {
    try {
      const rec = await this.api.enroll(biomarkers);
      renderRecommendation(byId("recommendation"), rec);
      await this.refreshState();
      await this.poll();
    } catch (err) {
      this.report(err, () => void this.enroll(biomarkers));
    }
  }

  private async recordOutcome(patientId: number, y: 0 | 1): Promise<void> {
    try {
      const delta = await this.api.recordOutcome(patientId, y);
      if (delta.dropped_arms.length > 0) {
        toast(`arm(s) dropped: ${delta.dropped_arms.join(", ")}`, "error");
      }
      if (delta.stopped) {
        toast(`trial stopped (${delta.stop_reason ?? ""})`, "error");
      }
      await this.refreshState();
      await this.poll();
    } catch (err) {
      this.report(err, () => void this.recordOutcome(patientId, y));
    }
  }

  private async poll(): Promise<void> {
    try {
      const page = await this.api.eventsSince(this.session.eventCursor);
      const fresh = this.session.absorbEvents(page.events);
      if (fresh.length > 0) {
        renderEventFeed(byId("events"), this.session.events);
        if (
          fresh.some(
            (e) => e.kind === "arm_dropped" || e.kind === "trial_stopped",
          )
        ) {
          await this.refreshState();
        }
      }
    } catch (err) {
      if (err instanceof ApiError && err.status === 0) return; // offline: retry next tick
      throw err;
    }
  }

  private report(err: unknown, retry: () => void): void {
    if (err instanceof ApiError) {
      if (err.status === 0) {
        toast("service unreachable - nothing was changed", "error", retry);
      } else if (err.status === 409) {
        toast(`conflict: ${err.message}`, "error");
      } else {
        toast(`${err.kind}: ${err.message}`, "error");
      }
      return;
    }
    throw err;
  }
}

async function connectExisting(baseUrl: string, trialId: string): Promise<void> {
  const console_ = new Console(baseUrl, trialId);
  await console_.start();
  byId("connect").classList.add("hidden");
  byId("console").classList.remove("hidden");
}

function wireConnectForm(): void {
  const form = byId("connect-form") as HTMLFormElement;
  form.addEventListener("submit", (evt) => {
    evt.preventDefault();
    const baseUrl = (byId("base-url") as HTMLInputElement).value.replace(/\/$/, "");
    const trialId = (byId("trial-id") as HTMLInputElement).value.trim();
    if (!trialId) return;
    void connectExisting(baseUrl, trialId).catch((err) =>
      toast(String(err), "error"),
    );
  });
}

if (typeof document !== "undefined" && document.getElementById("connect-form")) {
  wireConnectForm();
}

export { Console, connectExisting };
