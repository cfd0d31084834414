/**
 * Wire protocol: newline-delimited JSON messages, discriminated by `type`.
 * Mirrors wire-schema.json; every outbound message is validated before send
 * and every inbound line is validated before it reaches session state.
 */

export const PROTOCOL_VERSION = 1;

export interface HelloMsg {
  type: "hello";
  version?: number;
  checkpoints?: string[];
}

export interface StartMsg {
  type: "start";
  checkpoint: string;
  seed?: number;
  episode_seconds?: number;
}

export interface FrameMsg {
  type: "frame";
  tick: number;
  pixels: string; // base64 raw RGB bytes, row-major
  height: number;
  width: number;
  agent_utterance?: string;
}

export interface SetterTextMsg {
  type: "setter_text";
  text: string;
}

export interface RateMsg {
  type: "rate";
  success: boolean;
  recorded?: string;
}

export interface EndMsg {
  type: "end";
  reason: string;
}

export interface ErrorMsg {
  type: "error";
  code: string;
  detail?: string;
}

export type WireMessage =
  | HelloMsg
  | StartMsg
  | FrameMsg
  | SetterTextMsg
  | RateMsg
  | EndMsg
  | ErrorMsg;

export class ProtocolViolation extends Error {}

type Obj = Record<string, unknown>;

function isObj(x: unknown): x is Obj {
  return typeof x === "object" && x !== null && !Array.isArray(x);
}

interface FieldSpec {
  required: boolean;
  check: (v: unknown) => boolean;
}

const int = (min: number) => (v: unknown) =>
  typeof v === "number" && Number.isInteger(v) && v >= min;
const num = (exclusiveMin: number) => (v: unknown) =>
  typeof v === "number" && Number.isFinite(v) && v > exclusiveMin;
const str = (minLength = 0) => (v: unknown) =>
  typeof v === "string" && v.length >= minLength;
const bool = (v: unknown) => typeof v === "boolean";
const strArray = (v: unknown) =>
  Array.isArray(v) && v.every((x) => typeof x === "string");

const FIELDS: Record<WireMessage["type"], Record<string, FieldSpec>> = {
  hello: {
    version: { required: false, check: int(1) },
    checkpoints: { required: false, check: strArray },
  },
  start: {
    checkpoint: { required: true, check: str(1) },
    seed: { required: false, check: int(0) },
    episode_seconds: { required: false, check: num(0) },
  },
  frame: {
    tick: { required: true, check: int(0) },
    pixels: { required: true, check: str() },
    height: { required: true, check: int(1) },
    width: { required: true, check: int(1) },
    agent_utterance: { required: false, check: str() },
  },
  setter_text: {
    text: { required: true, check: str(1) },
  },
  rate: {
    success: { required: true, check: bool },
    recorded: { required: false, check: str() },
  },
  end: {
    reason: { required: true, check: str(1) },
  },
  error: {
    code: { required: true, check: str(1) },
    detail: { required: false, check: str() },
  },
};

/** Validate one decoded message against the wire schema. Throws on failure. */
export function validateMessage(msg: unknown): WireMessage {
  if (!isObj(msg)) {
    throw new ProtocolViolation("message must be a JSON object");
  }
  const t = msg["type"];
  if (typeof t !== "string" || !(t in FIELDS)) {
    throw new ProtocolViolation(`unknown message type ${JSON.stringify(t)}`);
  }
  const spec = FIELDS[t as WireMessage["type"]];
  for (const [name, field] of Object.entries(spec)) {
    const present = name in msg;
    if (field.required && !present) {
      throw new ProtocolViolation(`${t}: missing required field ${name}`);
    }
    if (present && !field.check(msg[name])) {
      throw new ProtocolViolation(`${t}: invalid field ${name}`);
    }
  }
  for (const key of Object.keys(msg)) {
    if (key !== "type" && !(key in spec)) {
      throw new ProtocolViolation(`${t}: unexpected field ${key}`);
    }
  }
  return msg as unknown as WireMessage;
}

/** Serialize a message for the wire (validated, newline-terminated). */
export function encodeMessage(msg: WireMessage): string {
  validateMessage(msg);
  return JSON.stringify(msg) + "\n";
}

/** Parse and validate one wire line. Throws ProtocolViolation on bad input. */
export function decodeLine(line: string): WireMessage {
  let parsed: unknown;
  try {
    parsed = JSON.parse(line);
  } catch {
    throw new ProtocolViolation("bad JSON line");
  }
  return validateMessage(parsed);
}
