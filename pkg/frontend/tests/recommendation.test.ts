// Contract: the recommendation panel shows exactly the service-provided
// q values and recommends exactly the service-provided arm, on a fresh
// trial and a scenario-2-style mid-trial journal.

import { beforeEach, describe, expect, it } from "vitest";

import { renderRecommendation } from "../src/components/recommendation.js";
import type { RecommendationView } from "../src/types.js";

import freshRec from "./fixtures/fresh/recommendation.json";
import midRec from "./fixtures/midtrial/recommendation.json";

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

describe("recommendation panel", () => {
  it("renders the fresh-trial q values verbatim (all at the prior mean)", () => {
    const rec = freshRec as RecommendationView;
    renderRecommendation(host, rec);
    const shown = renderedQ(host);
    expect(Object.keys(shown).sort()).toEqual(Object.keys(rec.q).sort());
    for (const [arm, q] of Object.entries(rec.q)) {
      expect(shown[arm]).toBe(q); // exact equality with the service value
      expect(q).toBeCloseTo(0.5, 12); // prior mean, up to float summation
    }
    const badge = host.querySelector<HTMLElement>(".badge")!;
    expect(badge.dataset.phase).toBe("run_in");
    expect(badge.textContent).toBe("Run-in");
  });

  it("renders the mid-trial q values verbatim and highlights the service's arm", () => {
    const rec = midRec as RecommendationView;
    renderRecommendation(host, rec);
    const shown = renderedQ(host);
    for (const [arm, q] of Object.entries(rec.q)) {
      expect(shown[arm]).toBe(q);
    }
    const highlighted = host.querySelectorAll<HTMLElement>(".q-row.recommended");
    expect(highlighted.length).toBe(1);
    expect(Number(highlighted[0]!.dataset.arm)).toBe(rec.recommended_arm);
    // the service's recommendation is the argmax of its own q vector
    const best = Object.entries(rec.q).sort((a, b) => b[1] - a[1])[0]![0];
    expect(Number(best)).toBe(rec.recommended_arm);
    expect(host.querySelector<HTMLElement>(".badge")!.dataset.phase).toBe(
      "adaptive",
    );
  });

  it("shows the assignment text with the service arm", () => {
    const rec = midRec as RecommendationView;
    renderRecommendation(host, rec);
    const assignment = host.querySelector<HTMLElement>(".assignment")!;
    expect(Number(assignment.dataset.arm)).toBe(rec.arm);
    expect(assignment.textContent).toContain(`arm ${rec.arm}`);
  });
});
