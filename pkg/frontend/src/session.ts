/**
 * Client session state machine. Owns the live view the UI renders from:
 * connection state, latest frame, tick-ordered transcript, prompt card,
 * and rating-control state. All outbound messages are schema-validated;
 * malformed inbound lines surface as a banner without crashing the session.
 */

import {
  decodeLine,
  encodeMessage,
  FrameMsg,
  ProtocolViolation,
  WireMessage,
} from "./protocol";
import { decodeFramePixels, PixelError } from "./pixels";
import { Transport } from "./transport";

export type ConnectionState =
  | "connecting"
  | "ready" // hello exchanged, no episode running
  | "live" // episode in progress
  | "ended" // episode over, rating allowed
  | "rated" // rating acknowledged
  | "closed";

export interface TranscriptEntry {
  tick: number;
  role: "setter" | "agent";
  text: string;
}

export interface DecodedFrame {
  tick: number;
  height: number;
  width: number;
  rgb: Uint8Array;
}

export interface SessionRecord {
  checkpoint: string;
  frames: DecodedFrame[];
  transcript: TranscriptEntry[];
  rating: boolean | "unset";
  endReason: string | null;
}

export interface ClientSessionView {
  state: ConnectionState;
  checkpoints: string[];
  serverVersion: number | null;
  latestFrame: DecodedFrame | null;
  transcript: TranscriptEntry[];
  promptCard: string;
  banner: string | null;
  ratingEnabled: boolean;
  ratingSubmitted: boolean;
  recordedPath: string | null;
  endReason: string | null;
}

/** Non-adversarial guidance shown on the prompt card during live play. */
export const PROMPT_CARD =
  "Set tasks the agent could plausibly do: ask it to go to, lift, or " +
  "answer questions about objects in the room. Speak plainly; do not " +
  "try to trick the agent.";

export class SetterSession {
  readonly view: ClientSessionView;
  private transport: Transport;
  private record: SessionRecord | null = null;
  private listeners: (() => void)[] = [];

  constructor(transport: Transport) {
    this.transport = transport;
    this.view = {
      state: "connecting",
      checkpoints: [],
      serverVersion: null,
      latestFrame: null,
      transcript: [],
      promptCard: PROMPT_CARD,
      banner: null,
      ratingEnabled: false,
      ratingSubmitted: false,
      recordedPath: null,
      endReason: null,
    };
    transport.onLine((line) => this.handleLine(line));
    transport.onClose(() => {
      if (this.view.state !== "rated" && this.view.state !== "closed") {
        this.view.banner = "connection lost; session unrated";
      }
      this.view.state = "closed";
      this.view.ratingEnabled = false;
      this.notify();
    });
    this.send({ type: "hello" });
  }

  /** Subscribe to view changes (UI re-render hook). */
  onChange(fn: () => void): void {
    this.listeners.push(fn);
  }

  private notify(): void {
    for (const fn of this.listeners) fn();
  }

  private send(msg: WireMessage): void {
    this.transport.sendLine(encodeMessage(msg).trimEnd());
  }

  start(checkpoint: string, seed?: number, episodeSeconds?: number): void {
    if (this.view.state !== "ready") return;
    const msg: WireMessage = { type: "start", checkpoint };
    if (seed !== undefined) msg.seed = seed;
    if (episodeSeconds !== undefined) msg.episode_seconds = episodeSeconds;
    this.record = {
      checkpoint,
      frames: [],
      transcript: [],
      rating: "unset",
      endReason: null,
    };
    this.send(msg);
  }

  /** Send a setter utterance. Only valid during a live episode. */
  submitUtterance(text: string): boolean {
    if (this.view.state !== "live" || text.length === 0) return false;
    this.send({ type: "setter_text", text });
    const tick = this.view.latestFrame ? this.view.latestFrame.tick : 0;
    this.addTranscript({ tick, role: "setter", text });
    this.notify();
    return true;
  }

  /** One-shot rating; inert unless the episode has ended and is unrated. */
  submitRating(success: boolean): boolean {
    if (!this.view.ratingEnabled || this.view.ratingSubmitted) return false;
    this.view.ratingSubmitted = true;
    this.view.ratingEnabled = false;
    if (this.record) this.record.rating = success;
    this.send({ type: "rate", success });
    this.notify();
    return true;
  }

  endEpisode(): void {
    if (this.view.state !== "live") return;
    this.send({ type: "end", reason: "client_end" });
  }

  close(): void {
    this.transport.close();
  }

  /** The completed session's local record (for the replay browser). */
  takeRecord(): SessionRecord | null {
    return this.record;
  }

  private addTranscript(entry: TranscriptEntry): void {
    // strictly tick-ordered insert (stable for equal ticks)
    const t = this.view.transcript;
    let i = t.length;
    while (i > 0 && t[i - 1].tick > entry.tick) i--;
    t.splice(i, 0, entry);
    if (this.record) this.record.transcript = [...t];
  }

  private handleLine(line: string): void {
    let msg: WireMessage;
    try {
      msg = decodeLine(line);
    } catch (e) {
      this.view.banner =
        e instanceof ProtocolViolation
          ? `malformed server message: ${e.message}`
          : "malformed server message";
      this.notify();
      return;
    }
    this.handleMessage(msg);
  }

  private handleMessage(msg: WireMessage): void {
    switch (msg.type) {
      case "hello":
        this.view.serverVersion = msg.version ?? null;
        this.view.checkpoints = msg.checkpoints ?? [];
        this.view.state = "ready";
        break;
      case "frame":
        this.handleFrame(msg);
        break;
      case "end":
        this.view.state = "ended";
        this.view.endReason = msg.reason;
        this.view.ratingEnabled = !this.view.ratingSubmitted;
        if (this.record) this.record.endReason = msg.reason;
        break;
      case "rate":
        this.view.state = "rated";
        this.view.recordedPath = msg.recorded ?? null;
        break;
      case "error":
        this.view.banner = `server error ${msg.code}` +
          (msg.detail ? `: ${msg.detail}` : "");
        break;
      default:
        // client-directed protocol has no other server->client messages;
        // anything else is surfaced but non-fatal
        this.view.banner = `unexpected server message type ${msg.type}`;
    }
    this.notify();
  }

  private handleFrame(msg: FrameMsg): void {
    let rgb: Uint8Array;
    try {
      rgb = decodeFramePixels(msg.pixels, msg.height, msg.width);
    } catch (e) {
      this.view.banner =
        e instanceof PixelError ? e.message : "undecodable frame";
      return;
    }
    if (this.view.state === "ready") this.view.state = "live";
    const frame: DecodedFrame = {
      tick: msg.tick,
      height: msg.height,
      width: msg.width,
      rgb,
    };
    this.view.latestFrame = frame;
    if (this.record) this.record.frames.push(frame);
    if (msg.agent_utterance !== undefined && msg.agent_utterance.length > 0) {
      this.addTranscript({
        tick: msg.tick,
        role: "agent",
        text: msg.agent_utterance,
      });
    }
  }
}
