// Contract: the what-if chart shows exactly the service's predictive
// values, warns about extrapolation using the service-reported observed
// ranges, and is deterministic for identical inputs.

import { beforeEach, describe, expect, it } from "vitest";

import { isExtrapolating, renderWhatIf } from "../src/components/whatif.js";
import type { PredictiveView, TrialStateView } from "../src/types.js";

import freshPredictive from "./fixtures/fresh/predictive.json";
import midPredictive from "./fixtures/midtrial/predictive.json";
import midState from "./fixtures/midtrial/state.json";
import stoppedPredictive from "./fixtures/stopped/predictive.json";

let host: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = "<div id='host'></div>";
  host = document.getElementById("host")!;
});

function renderedQ(container: HTMLElement): Record<string, number> {
  const out: Record<string, number> = {};
  for (const row of container.querySelectorAll<HTMLElement>(".q-row")) {
    out[row.dataset.arm!] = Number(row.dataset.q);
  }
  return out;
}

describe("what-if panel", () => {
  it("fresh trial: every arm at the exact prior mean from the service", () => {
    const view = freshPredictive as PredictiveView;
    renderWhatIf(host, view, [0, 0, 0, 0], null);
    const shown = renderedQ(host);
    for (const [arm, q] of Object.entries(view.q)) {
      expect(shown[arm]).toBe(q); // exact equality with the service value
      expect(q).toBeCloseTo(0.5, 12); // prior mean, up to float summation
    }
  });

  it("mid-trial: values verbatim plus an extrapolation warning", () => {
    const view = midPredictive as PredictiveView;
    const state = midState as unknown as TrialStateView;
    // the fixture queried x2 = 2.5, outside the observed range
    const inputs = [0.0, 2.5, 0.0, 0.0];
    expect(isExtrapolating(inputs, state.biomarker_ranges)).toBe(true);
    renderWhatIf(host, view, inputs, state.biomarker_ranges);
    const shown = renderedQ(host);
    for (const [arm, q] of Object.entries(view.q)) {
      expect(shown[arm]).toBe(q);
    }
    expect(host.querySelector(".warning.extrapolation")).not.toBeNull();
  });

  it("no warning inside the observed range", () => {
    const view = midPredictive as PredictiveView;
    const state = midState as unknown as TrialStateView;
    renderWhatIf(host, view, [0, 0, 0, 0], state.biomarker_ranges);
    expect(host.querySelector(".warning.extrapolation")).toBeNull();
  });

  it("identical input twice renders identical markup", () => {
    const view = stoppedPredictive as PredictiveView;
    renderWhatIf(host, view, [0.2, 0.2], null);
    const first = host.innerHTML;
    renderWhatIf(host, view, [0.2, 0.2], null);
    expect(host.innerHTML).toBe(first);
  });
});
