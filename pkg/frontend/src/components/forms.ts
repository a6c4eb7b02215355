// Enrollment and outcome entry forms. Inputs are validated client-side
// (numeric, one per biomarker); everything else is confirmed by the
// service before any UI state changes.

import { el, stopReasonLabel } from "../format.js";
import type { TrialStateView } from "../types.js";

export function renderEnrollForm(
  container: HTMLElement,
  state: TrialStateView,
  onSubmit: (biomarkers: number[]) => void,
): void {
  container.replaceChildren();
  const form = el("form", "panel enroll-form");
  form.appendChild(el("h3", undefined, "Enroll patient"));
  const stopped = state.phase === "stopped";
  const inputs: HTMLInputElement[] = [];
  for (const label of state.marker_labels) {
    const row = el("label", "field");
    row.appendChild(el("span", "field-label", label));
    const input = el("input", "field-input");
    input.type = "number";
    input.step = "any";
    input.required = true;
    input.disabled = stopped;
    input.name = label;
    inputs.push(input);
    row.appendChild(input);
    form.appendChild(row);
  }
  const submit = el("button", "primary", "Enroll and get recommendation");
  submit.type = "submit";
  submit.disabled = stopped;
  form.appendChild(submit);
  if (stopped) {
    form.appendChild(
      el("p", "warning stop-note", stopReasonLabel(state.stop_reason)),
    );
  }
  const error = el("p", "field-error");
  form.appendChild(error);
  form.addEventListener("submit", (evt) => {
    evt.preventDefault();
    const values = inputs.map((i) => i.value.trim());
    if (values.some((v) => v === "" || Number.isNaN(Number(v)))) {
      error.textContent = "Every biomarker needs a numeric value.";
      return;
    }
    error.textContent = "";
    onSubmit(values.map(Number));
  });
  container.appendChild(form);
}

export function renderOutcomeForm(
  container: HTMLElement,
  state: TrialStateView,
  onSubmit: (patientId: number, y: 0 | 1) => void,
): void {
  container.replaceChildren();
  const form = el("form", "panel outcome-form");
  form.appendChild(el("h3", undefined, "Record outcome"));
  if (state.pending_outcomes.length === 0) {
    form.appendChild(el("p", "empty-state", "No outcomes pending."));
    container.appendChild(form);
    return;
  }
  const select = el("select", "pending-select");
  for (const pending of state.pending_outcomes) {
    const option = el("option");
    option.value = String(pending.patient_id);
    option.textContent = `patient ${pending.patient_id} (arm ${pending.arm})`;
    select.appendChild(option);
  }
  form.appendChild(select);
  const buttons = el("div", "outcome-buttons");
  for (const [value, label] of [
    [1, "Response"],
    [0, "No response"],
  ] as const) {
    const btn = el("button", value === 1 ? "primary" : "secondary", label);
    btn.type = "button";
    btn.addEventListener("click", () =>
      onSubmit(Number(select.value), value),
    );
    buttons.appendChild(btn);
  }
  form.appendChild(buttons);
  container.appendChild(form);
}
