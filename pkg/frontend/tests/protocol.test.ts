import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import {
  decodeLine,
  encodeMessage,
  ProtocolViolation,
  validateMessage,
  WireMessage,
} from "../src/protocol";

const GOLDEN = JSON.parse(
  readFileSync(
    join(__dirname, "..", "..", "tests", "golden", "wire_transcript.json"),
    "utf8",
  ),
);

describe("wire message validation", () => {
  const good: unknown[] = [
    { type: "hello" },
    { type: "hello", version: 1, checkpoints: ["best", "tiny"] },
    { type: "start", checkpoint: "best" },
    { type: "start", checkpoint: "best", seed: 7, episode_seconds: 2.5 },
    { type: "frame", tick: 0, pixels: "AAAA", height: 1, width: 1 },
    {
      type: "frame",
      tick: 3,
      pixels: "",
      height: 2,
      width: 2,
      agent_utterance: "yes",
    },
    { type: "setter_text", text: "lift the red duck" },
    { type: "rate", success: true },
    { type: "rate", success: false, recorded: "sessions/session-0000.rec" },
    { type: "end", reason: "time_limit" },
    { type: "error", code: "not_ended", detail: "episode still running" },
  ];

  const bad: unknown[] = [
    null,
    "hello",
    { type: "unknown" },
    {},
    { type: "start" }, // missing checkpoint
    { type: "start", checkpoint: "" }, // empty checkpoint
    { type: "start", checkpoint: "x", seed: -1 },
    { type: "start", checkpoint: "x", episode_seconds: 0 },
    { type: "frame", tick: 0, pixels: "AAAA", height: 1 }, // missing width
    { type: "frame", tick: -1, pixels: "AAAA", height: 1, width: 1 },
    { type: "frame", tick: 0.5, pixels: "AAAA", height: 1, width: 1 },
    { type: "setter_text", text: "" },
    { type: "setter_text" },
    { type: "rate" },
    { type: "rate", success: "yes" },
    { type: "end" },
    { type: "error" },
    { type: "hello", version: 0 },
    { type: "hello", checkpoints: [1, 2] },
    { type: "setter_text", text: "hi", extra: true }, // unexpected field
  ];

  it("accepts every well-formed message", () => {
    for (const msg of good) {
      expect(() => validateMessage(msg)).not.toThrow();
    }
  });

  it("rejects every malformed message", () => {
    for (const msg of bad) {
      expect(() => validateMessage(msg), JSON.stringify(msg)).toThrow(
        ProtocolViolation,
      );
    }
  });

  it("round-trips via encode/decode", () => {
    for (const msg of good) {
      const line = encodeMessage(msg as WireMessage);
      expect(line.endsWith("\n")).toBe(true);
      expect(decodeLine(line.trimEnd())).toEqual(msg);
    }
  });

  it("rejects non-JSON lines", () => {
    expect(() => decodeLine("{not json")).toThrow(ProtocolViolation);
  });
});

describe("golden transcript conformance", () => {
  it("every recorded server message passes validation", () => {
    for (const msg of GOLDEN.server_messages) {
      expect(() => validateMessage(msg)).not.toThrow();
    }
  });

  it("every recorded client message passes validation", () => {
    for (const msg of GOLDEN.client_script) {
      expect(() => validateMessage(msg)).not.toThrow();
    }
  });

  it("transcript shape matches the session contract", () => {
    const types = GOLDEN.server_messages.map((m: { type: string }) => m.type);
    expect(types[0]).toBe("hello");
    expect(types[types.length - 2]).toBe("end");
    expect(types[types.length - 1]).toBe("rate");
    expect(types.filter((t: string) => t === "frame").length).toBeGreaterThan(0);
  });
});
