/**
 * Session replay: steps through a recorded session's frames with the
 * transcript kept in sync by tick. Pure logic; the DOM layer drives it
 * with a timer and draws the current frame.
 */

import { DecodedFrame, SessionRecord, TranscriptEntry } from "./session";

export interface ReplayView {
  frameIndex: number;
  frame: DecodedFrame | null;
  /** Transcript entries whose tick is <= the current frame's tick. */
  visibleTranscript: TranscriptEntry[];
  done: boolean;
}

export class SessionReplay {
  readonly record: SessionRecord;
  private index = -1;

  constructor(record: SessionRecord) {
    this.record = record;
  }

  get length(): number {
    return this.record.frames.length;
  }

  view(): ReplayView {
    const frame =
      this.index >= 0 && this.index < this.length
        ? this.record.frames[this.index]
        : null;
    const tick = frame ? frame.tick : -1;
    return {
      frameIndex: this.index,
      frame,
      visibleTranscript: this.record.transcript.filter((e) => e.tick <= tick),
      done: this.index >= this.length - 1,
    };
  }

  /** Advance one frame; returns the new view. No-op once done. */
  next(): ReplayView {
    if (this.index < this.length - 1) this.index++;
    return this.view();
  }

  seek(frameIndex: number): ReplayView {
    this.index = Math.max(-1, Math.min(frameIndex, this.length - 1));
    return this.view();
  }
}

export interface ReplayListEntry {
  label: string;
  record: SessionRecord;
}

/** Browser-side list of replayable sessions collected during this visit. */
export class ReplayLibrary {
  private entries: ReplayListEntry[] = [];

  add(record: SessionRecord): ReplayListEntry {
    const rating =
      record.rating === "unset" ? "unrated" : record.rating ? "success" : "failure";
    const entry = {
      label:
        `session ${this.entries.length + 1}: ${record.checkpoint}, ` +
        `${record.frames.length} frames, ${rating}`,
      record,
    };
    this.entries.push(entry);
    return entry;
  }

  list(): ReplayListEntry[] {
    return [...this.entries];
  }

  open(index: number): SessionReplay {
    if (index < 0 || index >= this.entries.length) {
      throw new Error(`no recorded session at index ${index}`);
    }
    return new SessionReplay(this.entries[index].record);
  }
}
