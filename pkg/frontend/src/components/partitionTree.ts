// Reported-partition view: the least-squares tree as nested lists.
// Split nodes show the biomarker number and threshold; leaves show the
// recommended arm and per-arm posterior mean response, with assignment
// counts available on hover (title attribute) and in data-* form.

import { el, fmtProb, fmtThreshold } from "../format.js";
import type { PartitionNode, PartitionView } from "../types.js";

export function renderPartitionTree(
  container: HTMLElement,
  view: PartitionView | null,
): void {
  container.replaceChildren();
  if (view === null) {
    container.appendChild(
      el("p", "empty-state", "No outcomes recorded yet - the partition appears after the first response."),
    );
    return;
  }
  const panel = el("div", "panel partition");
  panel.dataset.layout = view.layout;
  panel.appendChild(el("h3", undefined, "Reported partition"));
  panel.appendChild(renderNode(view.partition));
  container.appendChild(panel);
}

function renderNode(node: PartitionNode): HTMLElement {
  if (node.kind === "split") {
    const wrap = el("div", "tree-node split");
    const circle = el(
      "span",
      "split-circle",
      String(node.marker),
    );
    circle.title = `biomarker ${node.marker} at ${fmtThreshold(node.threshold)}`;
    circle.dataset.marker = String(node.marker);
    circle.dataset.threshold = String(node.threshold);
    wrap.appendChild(circle);
    wrap.appendChild(
      el("span", "split-rule", `biomarker ${node.marker} < ${fmtThreshold(node.threshold)} ?`),
    );
    const children = el("div", "tree-children");
    const lower = el("div", "tree-branch lower");
    lower.appendChild(el("span", "branch-label", "lower"));
    lower.appendChild(renderNode(node.lower));
    const upper = el("div", "tree-branch upper");
    upper.appendChild(el("span", "branch-label", "upper"));
    upper.appendChild(renderNode(node.upper));
    children.appendChild(lower);
    children.appendChild(upper);
    wrap.appendChild(children);
    return wrap;
  }
  const leaf = el("div", "tree-node leaf");
  leaf.dataset.leafIndex = String(node.leaf_index);
  leaf.dataset.recommendedArm = String(node.recommended_arm);
  leaf.appendChild(el("span", "leaf-arm", `arm ${node.recommended_arm}`));
  const arms = Object.keys(node.post_mean).sort((a, b) => Number(a) - Number(b));
  const means = el("div", "leaf-means");
  const hover: string[] = [];
  for (const arm of arms) {
    const mean = node.post_mean[arm]!;
    const count = node.counts[arm]!;
    const row = el("span", "leaf-mean");
    row.dataset.arm = arm;
    row.dataset.mean = String(mean);
    row.dataset.count = String(count);
    row.textContent = `arm ${arm}: ${fmtProb(mean)}`;
    means.appendChild(row);
    hover.push(`arm ${arm}: ${count} treated, ${node.successes[arm]} responded`);
  }
  leaf.title = hover.join("; ");
  leaf.appendChild(means);
  leaf.appendChild(el("span", "leaf-n", `${node.n_patients} patients`));
  return leaf;
}
