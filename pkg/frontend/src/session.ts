// Console session state: the trial id, the event-feed cursor, and cached
// service views. The cursor only moves forward; everything else is a
// verbatim copy of the latest service response.

import type { TrialEvent, TrialStateView } from "./types.js";

export class ConsoleSession {
  readonly trialId: string;
  private cursor = 0;
  events: TrialEvent[] = [];
  state: TrialStateView | null = null;

  constructor(trialId: string) {
    this.trialId = trialId;
  }

  get eventCursor(): number {
    return this.cursor;
  }

  absorbState(state: TrialStateView): void {
    this.state = state;
  }

  absorbEvents(events: TrialEvent[]): TrialEvent[] {
    // events arrive in journal order; drop anything at or before the cursor
    const fresh = events.filter((e) => e.seq > this.cursor);
    fresh.sort((a, b) => a.seq - b.seq);
    for (const e of fresh) {
      this.events.push(e);
      this.cursor = e.seq;
    }
    return fresh;
  }
}
