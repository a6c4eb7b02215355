// Forms: client-side numeric validation, disabled state on stopped trials
// (with the stop reason shown), and pending-outcome listing.

import { beforeEach, describe, expect, it, vi } from "vitest";

import { renderEnrollForm, renderOutcomeForm } from "../src/components/forms.js";
import type { TrialStateView } from "../src/types.js";

import freshState from "./fixtures/fresh/state.json";
import stoppedState from "./fixtures/stopped/state.json";

let host: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = "<div id='host'></div>";
  host = document.getElementById("host")!;
});

describe("enroll form", () => {
  it("renders one numeric input per biomarker label", () => {
    const state = freshState as unknown as TrialStateView;
    renderEnrollForm(host, state, () => {});
    const inputs = host.querySelectorAll<HTMLInputElement>("input");
    expect(inputs.length).toBe(state.marker_labels.length);
    const labels = [...host.querySelectorAll(".field-label")].map(
      (n) => n.textContent,
    );
    expect(labels).toEqual(state.marker_labels);
  });

  it("rejects non-numeric input client-side without calling the service", () => {
    const state = freshState as unknown as TrialStateView;
    const submit = vi.fn();
    renderEnrollForm(host, state, submit);
    const form = host.querySelector("form")!;
    form.dispatchEvent(new Event("submit", { cancelable: true }));
    expect(submit).not.toHaveBeenCalled();
    expect(host.querySelector(".field-error")!.textContent).not.toBe("");
  });

  it("submits parsed numbers when all fields are filled", () => {
    const state = freshState as unknown as TrialStateView;
    const submit = vi.fn();
    renderEnrollForm(host, state, submit);
    const inputs = [...host.querySelectorAll<HTMLInputElement>("input")];
    const values = ["0.1", "0.2", "0.3", "0.4"];
    inputs.forEach((input, i) => (input.value = values[i]!));
    host
      .querySelector("form")!
      .dispatchEvent(new Event("submit", { cancelable: true }));
    expect(submit).toHaveBeenCalledWith([0.1, 0.2, 0.3, 0.4]);
  });

  it("is disabled with the stop reason on a stopped trial", () => {
    const state = stoppedState as unknown as TrialStateView;
    expect(state.phase).toBe("stopped");
    renderEnrollForm(host, state, () => {});
    const button = host.querySelector<HTMLButtonElement>("button")!;
    expect(button.disabled).toBe(true);
    for (const input of host.querySelectorAll<HTMLInputElement>("input")) {
      expect(input.disabled).toBe(true);
    }
    expect(host.querySelector(".stop-note")!.textContent).toContain(
      "one arm left",
    );
  });
});

describe("outcome form", () => {
  it("lists pending patients from the state view", () => {
    const state = freshState as unknown as TrialStateView;
    renderOutcomeForm(host, state, () => {});
    const options = host.querySelectorAll("option");
    expect(options.length).toBe(state.pending_outcomes.length);
  });

  it("reports the selected patient and outcome", () => {
    const state = freshState as unknown as TrialStateView;
    expect(state.pending_outcomes.length).toBeGreaterThan(0);
    const submit = vi.fn();
    renderOutcomeForm(host, state, submit);
    const buttons = host.querySelectorAll<HTMLButtonElement>("button");
    buttons[0]!.click();
    expect(submit).toHaveBeenCalledWith(
      state.pending_outcomes[0]!.patient_id,
      1,
    );
  });

  it("shows an empty state when nothing is pending", () => {
    const state = stoppedState as unknown as TrialStateView;
    expect(state.pending_outcomes.length).toBe(0);
    renderOutcomeForm(host, state, () => {});
    expect(host.querySelector(".empty-state")).not.toBeNull();
  });
});
