/**
 * DOM wiring: connects the session state machine to the page. The canvas
 * draws the latest frame with nearest-neighbor upscaling; the transcript,
 * prompt card, rating buttons, and replay browser render from the view.
 */

import { upscaleRgba } from "./pixels";
import { ReplayLibrary, SessionReplay } from "./replay";
import { DecodedFrame, SetterSession } from "./session";
import { WebSocketTransport } from "./transport";

const SCALE = 8;
const REPLAY_FPS = 15;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function drawFrame(canvas: HTMLCanvasElement, frame: DecodedFrame): void {
  const rgba = upscaleRgba(frame.rgb, frame.height, frame.width, SCALE);
  const w = frame.width * SCALE;
  const h = frame.height * SCALE;
  canvas.width = w;
  canvas.height = h;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const data = new Uint8ClampedArray(rgba.length);
  data.set(rgba);
  ctx.putImageData(new ImageData(data, w, h), 0, 0);
}

export function main(): void {
  const canvas = el<HTMLCanvasElement>("frame");
  const transcript = el<HTMLUListElement>("transcript");
  const prompt = el<HTMLParagraphElement>("prompt");
  const banner = el<HTMLDivElement>("banner");
  const status = el<HTMLSpanElement>("status");
  const checkpointSel = el<HTMLSelectElement>("checkpoint");
  const input = el<HTMLInputElement>("utterance");
  const startBtn = el<HTMLButtonElement>("start");
  const endBtn = el<HTMLButtonElement>("end");
  const goodBtn = el<HTMLButtonElement>("rate-success");
  const badBtn = el<HTMLButtonElement>("rate-failure");
  const replayList = el<HTMLUListElement>("replays");

  const url =
    new URLSearchParams(location.search).get("server") ??
    `ws://${location.hostname}:8765`;
  const session = new SetterSession(new WebSocketTransport(url));
  const library = new ReplayLibrary();
  let replay: SessionReplay | null = null;
  let replayTimer: number | null = null;

  prompt.textContent = session.view.promptCard;

  function render(): void {
    const v = session.view;
    status.textContent = v.state;
    banner.textContent = v.banner ?? "";
    banner.hidden = !v.banner;
    if (v.latestFrame && !replay) drawFrame(canvas, v.latestFrame);
    checkpointSel.innerHTML = "";
    for (const ck of v.checkpoints) {
      const opt = document.createElement("option");
      opt.value = ck;
      opt.textContent = ck;
      checkpointSel.appendChild(opt);
    }
    transcript.innerHTML = "";
    for (const entry of v.transcript) {
      const li = document.createElement("li");
      li.textContent = `[${entry.tick}] ${entry.role}: ${entry.text}`;
      transcript.appendChild(li);
    }
    startBtn.disabled = v.state !== "ready";
    endBtn.disabled = v.state !== "live";
    input.disabled = v.state !== "live";
    goodBtn.disabled = !v.ratingEnabled;
    badBtn.disabled = !v.ratingEnabled;
    if (v.state === "rated" || v.state === "closed") {
      const rec = session.takeRecord();
      if (rec && !library.list().some((e) => e.record === rec)) {
        library.add(rec);
        renderReplayList();
      }
    }
  }

  function renderReplayList(): void {
    replayList.innerHTML = "";
    library.list().forEach((entry, i) => {
      const li = document.createElement("li");
      const btn = document.createElement("button");
      btn.textContent = entry.label;
      btn.onclick = () => startReplay(i);
      li.appendChild(btn);
      replayList.appendChild(li);
    });
  }

  function startReplay(index: number): void {
    if (replayTimer !== null) window.clearInterval(replayTimer);
    replay = library.open(index);
    replayTimer = window.setInterval(() => {
      if (!replay) return;
      const view = replay.next();
      if (view.frame) drawFrame(canvas, view.frame);
      transcript.innerHTML = "";
      for (const entry of view.visibleTranscript) {
        const li = document.createElement("li");
        li.textContent = `[${entry.tick}] ${entry.role}: ${entry.text}`;
        transcript.appendChild(li);
      }
      if (view.done && replayTimer !== null) {
        window.clearInterval(replayTimer);
        replayTimer = null;
        replay = null;
      }
    }, 1000 / REPLAY_FPS);
  }

  session.onChange(render);
  startBtn.onclick = () => session.start(checkpointSel.value);
  endBtn.onclick = () => session.endEpisode();
  goodBtn.onclick = () => session.submitRating(true);
  badBtn.onclick = () => session.submitRating(false);
  input.onkeydown = (ev) => {
    if (ev.key === "Enter" && input.value.trim()) {
      session.submitUtterance(input.value.trim());
      input.value = "";
    }
  };
  render();
}

if (typeof document !== "undefined" && document.getElementById("frame")) {
  main();
}
