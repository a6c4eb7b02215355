// Contract: the event feed lists journal events in sequence order and
// raises alert styling for arm drops and trial stops.

import { beforeEach, describe, expect, it } from "vitest";

import { renderEventFeed } from "../src/components/eventFeed.js";
import type { EventsPage } from "../src/types.js";

import midEvents from "./fixtures/midtrial/events.json";
import stoppedEvents from "./fixtures/stopped/events.json";

let host: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = "<div id='host'></div>";
  host = document.getElementById("host")!;
});

describe("event feed", () => {
  it("renders events in journal sequence order", () => {
    const page = midEvents as EventsPage;
    // feed them shuffled; the component must restore journal order
    const shuffled = [...page.events].reverse();
    renderEventFeed(host, shuffled);
    const seqs = [...host.querySelectorAll<HTMLElement>(".event-row")].map(
      (r) => Number(r.dataset.seq),
    );
    const expected = page.events.map((e) => e.seq);
    expect(seqs).toEqual([...expected].sort((a, b) => a - b));
  });

  it("marks drop and stop events as alerts", () => {
    const page = stoppedEvents as EventsPage;
    renderEventFeed(host, page.events);
    const alerts = [...host.querySelectorAll<HTMLElement>(".event-row.alert")];
    const kinds = alerts.map((r) => r.dataset.kind);
    expect(kinds).toContain("arm_dropped");
    expect(kinds).toContain("trial_stopped");
    const normal = host.querySelectorAll(
      ".event-row[data-kind='outcome_recorded']",
    );
    expect([...normal].every((r) => !r.classList.contains("alert"))).toBe(true);
  });

  it("describes drops loudly", () => {
    const page = stoppedEvents as EventsPage;
    renderEventFeed(host, page.events);
    const drop = host.querySelector<HTMLElement>(
      ".event-row[data-kind='arm_dropped']",
    )!;
    expect(drop.textContent).toContain("DROPPED");
  });
});
