// Recommendation panel: per-arm predictive probability bars for the
// just-enrolled patient, with the service's recommended arm highlighted.
// Bar values are copied verbatim into data-q; no client-side math beyond
// bar width scaling.

import { el, fmtProb, phaseLabel } from "../format.js";
import type { RecommendationView } from "../types.js";

export function renderRecommendation(
  container: HTMLElement,
  rec: RecommendationView,
): void {
  container.replaceChildren();
  const panel = el("div", "panel recommendation");
  panel.dataset.patientId = String(rec.patient_id);

  const head = el("div", "panel-head");
  head.appendChild(el("h3", undefined, `Patient ${rec.patient_id}`));
  const badge = el("span", `badge phase-${rec.phase}`, phaseLabel(rec.phase));
  badge.dataset.phase = rec.phase;
  head.appendChild(badge);
  panel.appendChild(head);

  const assignment = el(
    "p",
    "assignment",
    `Assign arm ${rec.arm} (${rec.allocation_mode}, posterior ${rec.posterior_snapshot})`,
  );
  assignment.dataset.arm = String(rec.arm);
  assignment.dataset.recommendedArm = String(rec.recommended_arm);
  panel.appendChild(assignment);

  const bars = el("div", "q-bars");
  const arms = Object.keys(rec.q).sort((a, b) => Number(a) - Number(b));
  for (const arm of arms) {
    const q = rec.q[arm]!;
    const row = el("div", "q-row");
    if (Number(arm) === rec.recommended_arm) row.classList.add("recommended");
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
  container.appendChild(panel);
}
