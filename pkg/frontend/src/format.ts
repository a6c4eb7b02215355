// Display formatting. Raw service values are always kept verbatim in
// data-* attributes; these helpers only affect the visible text.

export function fmtProb(value: number): string {
  return value.toFixed(4);
}

export function fmtPercent(value: number): string {
  return `${(100 * value).toFixed(1)}%`;
}

export function fmtThreshold(value: number): string {
  return value.toFixed(3);
}

export function phaseLabel(phase: string): string {
  switch (phase) {
    case "run_in":
      return "Run-in";
    case "adaptive":
      return "Adaptive";
    case "stopped":
      return "Stopped";
    default:
      return phase;
  }
}

export function stopReasonLabel(reason: string | null): string {
  switch (reason) {
    case "single_arm_left":
      return "stopped early: one arm left";
    case "max_enrollment":
      return "stopped: maximum enrollment reached";
    default:
      return reason ?? "";
  }
}

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}
