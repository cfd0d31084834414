import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { bytesToBase64 } from "../src/pixels";
import { SetterSession } from "../src/session";
import { MemoryTransport } from "../src/transport";

const GOLDEN = JSON.parse(
  readFileSync(
    join(__dirname, "..", "..", "tests", "golden", "wire_transcript.json"),
    "utf8",
  ),
);

function framePayload(h: number, w: number, fill = 128): string {
  return bytesToBase64(new Uint8Array(h * w * 3).fill(fill));
}

/** Session wired to an in-memory server end; returns both sides. */
function setup(): { session: SetterSession; server: MemoryTransport } {
  const [client, server] = MemoryTransport.pair();
  const session = new SetterSession(client);
  return { session, server };
}

function serverSend(server: MemoryTransport, msg: unknown): void {
  server.sendLine(JSON.stringify(msg));
}

describe("session handshake and live flow", () => {
  it("sends hello first and becomes ready on the server reply", () => {
    const { session, server } = setup();
    expect(JSON.parse(server.peer!.sent[0])).toEqual({ type: "hello" });
    serverSend(server, { type: "hello", version: 1, checkpoints: ["best"] });
    expect(session.view.state).toBe("ready");
    expect(session.view.checkpoints).toEqual(["best"]);
    expect(session.view.serverVersion).toBe(1);
  });

  it("start emits a valid start message and frames flip the state to live", () => {
    const { session, server } = setup();
    serverSend(server, { type: "hello", version: 1, checkpoints: ["best"] });
    session.start("best", 11, 5);
    const sent = server.peer!.sent.map((l) => JSON.parse(l));
    expect(sent[1]).toEqual({
      type: "start",
      checkpoint: "best",
      seed: 11,
      episode_seconds: 5,
    });
    serverSend(server, {
      type: "frame",
      tick: 0,
      pixels: framePayload(2, 3),
      height: 2,
      width: 3,
    });
    expect(session.view.state).toBe("live");
    expect(session.view.latestFrame?.tick).toBe(0);
    expect(session.view.latestFrame?.rgb.length).toBe(2 * 3 * 3);
  });

  it("renders the full golden transcript without errors", () => {
    const { session, server } = setup();
    for (const msg of GOLDEN.server_messages) serverSend(server, msg);
    expect(session.view.banner).toBeNull();
    expect(session.view.latestFrame).not.toBeNull();
    expect(session.view.state).toBe("rated");
  });

  it("utterances go out as setter_text and land tick-ordered in the transcript", () => {
    const { session, server } = setup();
    serverSend(server, { type: "hello", version: 1, checkpoints: ["best"] });
    session.start("best");
    serverSend(server, {
      type: "frame", tick: 4, pixels: framePayload(1, 1), height: 1, width: 1,
    });
    expect(session.submitUtterance("go to the lamp")).toBe(true);
    serverSend(server, {
      type: "frame", tick: 8, pixels: framePayload(1, 1), height: 1, width: 1,
      agent_utterance: "ok",
    });
    const sent = server.peer!.sent.map((l) => JSON.parse(l));
    expect(sent.at(-1)).toEqual({ type: "setter_text", text: "go to the lamp" });
    expect(session.view.transcript.map((e) => [e.tick, e.role, e.text])).toEqual([
      [4, "setter", "go to the lamp"],
      [8, "agent", "ok"],
    ]);
  });

  it("refuses utterances outside a live episode", () => {
    const { session, server } = setup();
    serverSend(server, { type: "hello", version: 1, checkpoints: ["best"] });
    expect(session.submitUtterance("too early")).toBe(false);
    expect(server.peer!.sent.length).toBe(1); // only the hello
  });

  it("malformed server lines surface as a banner without crashing", () => {
    const { session, server } = setup();
    serverSend(server, { type: "hello", version: 1 });
    server.peer!.receiveRaw?.("");
    const clientEnd = server; // lines flow server -> client handler
    clientEnd.sendLine('{"type": "frame", "tick": -3}');
    expect(session.view.banner).toMatch(/malformed server message/);
    clientEnd.sendLine("not json at all");
    expect(session.view.banner).toMatch(/malformed server message/);
    expect(session.view.state).toBe("ready"); // session still alive
  });

  it("frame with wrong payload size is surfaced, not fatal", () => {
    const { session, server } = setup();
    serverSend(server, { type: "hello", version: 1 });
    serverSend(server, {
      type: "frame", tick: 0, pixels: framePayload(2, 2), height: 4, width: 4,
    });
    expect(session.view.banner).toMatch(/expected/);
    expect(session.view.latestFrame).toBeNull();
  });
});

describe("rating gate", () => {
  function toEnded(): { session: SetterSession; server: MemoryTransport } {
    const { session, server } = setup();
    serverSend(server, { type: "hello", version: 1, checkpoints: ["best"] });
    session.start("best");
    serverSend(server, {
      type: "frame", tick: 0, pixels: framePayload(1, 1), height: 1, width: 1,
    });
    serverSend(server, { type: "end", reason: "time_limit" });
    return { session, server };
  }

  it("rating controls enable only after the episode ends", () => {
    const { session, server } = setup();
    serverSend(server, { type: "hello", version: 1, checkpoints: ["best"] });
    session.start("best");
    expect(session.view.ratingEnabled).toBe(false);
    expect(session.submitRating(true)).toBe(false);
    expect(server.peer!.sent.some((l) => l.includes('"rate"'))).toBe(false);
  });

  it("rates exactly once; later clicks are inert", () => {
    const { session, server } = toEnded();
    expect(session.view.ratingEnabled).toBe(true);
    expect(session.submitRating(true)).toBe(true);
    expect(session.submitRating(false)).toBe(false);
    expect(session.submitRating(true)).toBe(false);
    const rates = server.peer!.sent
      .map((l) => JSON.parse(l))
      .filter((m) => m.type === "rate");
    expect(rates).toEqual([{ type: "rate", success: true }]);
  });

  it("acknowledged rating carries the recorded path into the view", () => {
    const { session, server } = toEnded();
    session.submitRating(false);
    serverSend(server, {
      type: "rate", success: false, recorded: "rec/session-0000.rec",
    });
    expect(session.view.state).toBe("rated");
    expect(session.view.recordedPath).toBe("rec/session-0000.rec");
  });

  it("disconnect before rating marks the session unrated", () => {
    const { session, server } = setup();
    serverSend(server, { type: "hello", version: 1, checkpoints: ["best"] });
    session.start("best");
    server.close();
    expect(session.view.state).toBe("closed");
    expect(session.view.banner).toMatch(/unrated/);
    expect(session.takeRecord()?.rating).toBe("unset");
  });
});
