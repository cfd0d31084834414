/**
 * Line transport abstraction: the session logic speaks newline-delimited
 * JSON over anything duplex. A WebSocket implementation serves browsers
 * (pointed at a ws<->tcp bridge or a ws-capable server); an in-memory pair
 * backs the tests.
 */

export interface Transport {
  sendLine(line: string): void;
  onLine(handler: (line: string) => void): void;
  onClose(handler: () => void): void;
  close(): void;
}

/** Browser transport over a WebSocket carrying one JSON message per text
 * frame (equivalent to one wire line). */
export class WebSocketTransport implements Transport {
  private ws: WebSocket;
  private lineHandler: ((line: string) => void) | null = null;
  private closeHandler: (() => void) | null = null;
  private buffer = "";

  constructor(url: string) {
    this.ws = new WebSocket(url);
    this.ws.onmessage = (ev) => {
      this.buffer += String(ev.data);
      let idx;
      while ((idx = this.buffer.indexOf("\n")) >= 0) {
        const line = this.buffer.slice(0, idx);
        this.buffer = this.buffer.slice(idx + 1);
        if (line && this.lineHandler) this.lineHandler(line);
      }
      // a text frame without trailing newline is a complete message too
      if (this.buffer && !this.buffer.includes("\n")) {
        const maybe = this.buffer.trim();
        if (maybe.startsWith("{") && maybe.endsWith("}")) {
          this.buffer = "";
          if (this.lineHandler) this.lineHandler(maybe);
        }
      }
    };
    this.ws.onclose = () => {
      if (this.closeHandler) this.closeHandler();
    };
  }

  sendLine(line: string): void {
    this.ws.send(line);
  }

  onLine(handler: (line: string) => void): void {
    this.lineHandler = handler;
  }

  onClose(handler: () => void): void {
    this.closeHandler = handler;
  }

  close(): void {
    this.ws.close();
  }
}

/** Synchronous in-memory transport pair for tests: what one side sends, the
 * other side's line handler receives. */
export class MemoryTransport implements Transport {
  peer: MemoryTransport | null = null;
  sent: string[] = [];
  private lineHandler: ((line: string) => void) | null = null;
  private closeHandler: (() => void) | null = null;
  private closed = false;

  static pair(): [MemoryTransport, MemoryTransport] {
    const a = new MemoryTransport();
    const b = new MemoryTransport();
    a.peer = b;
    b.peer = a;
    return [a, b];
  }

  sendLine(line: string): void {
    if (this.closed) throw new Error("transport closed");
    this.sent.push(line);
    const peer = this.peer;
    if (peer && peer.lineHandler) {
      for (const l of line.split("\n")) {
        if (l) peer.lineHandler(l);
      }
    }
  }

  /** Test helper: inject a raw line as if the remote end had sent it. */
  receiveRaw(line: string): void {
    if (this.lineHandler) this.lineHandler(line);
  }

  onLine(handler: (line: string) => void): void {
    this.lineHandler = handler;
  }

  onClose(handler: () => void): void {
    this.closeHandler = handler;
  }

  close(): void {
    if (this.closed) return;
    this.closed = true;
    if (this.closeHandler) this.closeHandler();
    if (this.peer && !this.peer.closed) this.peer.close();
  }
}
