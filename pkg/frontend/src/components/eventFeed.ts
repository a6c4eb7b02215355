// Event feed: journal events in sequence order. Arm drops and stops are
// alert rows so the coordinator cannot miss them.

import { el } from "../format.js";
import type { TrialEvent } from "../types.js";

function describe(event: TrialEvent): string {
  const p = event.payload as Record<string, unknown>;
  switch (event.kind) {
    case "trial_created":
      return `trial ${p.trial_id} created`;
    case "patient_enrolled":
      return `patient ${p.patient_id} enrolled`;
    case "arm_assigned":
      return `patient ${p.patient_id} assigned arm ${p.arm} (${p.phase})`;
    case "outcome_recorded":
      return `patient ${p.patient_id} outcome: ${p.y === 1 ? "response" : "no response"}`;
    case "arm_dropped":
      return `ARM ${p.arm} DROPPED after ${p.at_observed} outcomes`;
    case "trial_stopped":
      return `TRIAL STOPPED (${p.reason}) at ${p.stop_size} outcomes`;
    default:
      return event.kind;
  }
}

export function renderEventFeed(
  container: HTMLElement,
  events: TrialEvent[],
): void {
  container.replaceChildren();
  const list = el("ol", "event-feed");
  for (const event of [...events].sort((a, b) => a.seq - b.seq)) {
    const row = el("li", "event-row");
    row.dataset.seq = String(event.seq);
    row.dataset.kind = event.kind;
    if (event.kind === "arm_dropped" || event.kind === "trial_stopped") {
      row.classList.add("alert");
    }
    row.appendChild(el("span", "event-seq", `#${event.seq}`));
    row.appendChild(el("span", "event-text", describe(event)));
    list.appendChild(row);
  }
  container.appendChild(list);
}
