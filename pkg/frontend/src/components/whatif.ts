// What-if panel: read-only predictive probabilities for a hypothetical
// biomarker profile. Never enrolls; flags extrapolation when any input
// falls outside the observed biomarker range reported by the service.

import { el, fmtProb } from "../format.js";
import type { PredictiveView } from "../types.js";

export function isExtrapolating(
  inputs: number[],
  ranges: [number, number][] | null,
): boolean {
  if (ranges === null) return false;
  return inputs.some((v, k) => {
    const range = ranges[k];
    if (!range) return false;
    return v < range[0] || v > range[1];
  });
}

export function renderWhatIf(
  container: HTMLElement,
  view: PredictiveView,
  inputs: number[],
  ranges: [number, number][] | null,
): void {
  container.replaceChildren();
  const panel = el("div", "panel whatif");
  panel.appendChild(el("h3", undefined, "What-if query"));
  panel.appendChild(
    el("p", "whatif-input", `x = (${inputs.map((v) => String(v)).join(", ")})`),
  );
  if (isExtrapolating(inputs, ranges)) {
    panel.appendChild(
      el(
        "p",
        "warning extrapolation",
        "Outside the observed biomarker range - extrapolated estimate.",
      ),
    );
  }
  const bars = el("div", "q-bars");
  const arms = Object.keys(view.q).sort((a, b) => Number(a) - Number(b));
  for (const arm of arms) {
    const q = view.q[arm]!;
    const row = el("div", "q-row");
    row.dataset.arm = arm;
    row.dataset.q = String(q);
    row.appendChild(el("span", "q-label", `Arm ${arm}`));
    const track = el("div", "q-track");
    const fill = el("div", "q-fill");
    fill.style.width = `${Math.max(0, Math.min(1, q)) * 100}%`;
    track.appendChild(fill);
    row.appendChild(track);
    row.appendChild(el("span", "q-value", fmtProb(q)));
    bars.appendChild(row);
  }
  panel.appendChild(bars);
  panel.appendChild(
    el("p", "snapshot", `posterior ${view.posterior_snapshot}`),
  );
  container.appendChild(panel);
}
