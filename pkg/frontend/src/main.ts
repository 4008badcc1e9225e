// Browser entry: cursor drives the hand, click places the object.

import { SessionClient } from "./client.js";
import { CursorSynth, DEFAULT_SYNTH, Ticker } from "./synth.js";
import { Mode } from "./types.js";
import { DEFAULT_VIEW, View, formatMetrics } from "./view.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

function main(): void {
  const canvas = byId<HTMLCanvasElement>("table");
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("no 2d context");
  const view = new View(ctx, {
    width: canvas.width,
    height: canvas.height,
    ...DEFAULT_VIEW,
  });

  const params = new URLSearchParams(location.search);
  const url = params.get("service") ?? "ws://127.0.0.1:8765";
  let mode: Mode = params.get("mode") === "reactive" ? "reactive" : "preemptive";

  const client = new SessionClient(url, mode, (u) => new WebSocket(u));
  const synth = new CursorSynth(DEFAULT_SYNTH);
  let cursor: [number, number] | null = null;
  let placed = false;

  const statusEl = byId<HTMLSpanElement>("status");
  const bannerEl = byId<HTMLDivElement>("banner");
  const modeBtn = byId<HTMLButtonElement>("mode");
  const trialBtn = byId<HTMLButtonElement>("trial");
  const fusedBox = byId<HTMLInputElement>("fused");
  const outResponse = byId<HTMLSpanElement>("m-response");
  const outGrab = byId<HTMLSpanElement>("m-grab");
  const outError = byId<HTMLSpanElement>("m-error");

  client.onStatus = (s) => {
    statusEl.textContent = s;
    statusEl.className = s;
  };
  client.onMalformed = (raw) => view.noteMalformed(raw);

  const newTrial = (m?: Mode) => {
    if (m) mode = m;
    modeBtn.textContent = `mode: ${mode}`;
    synth.reset();
    view.clearTrial();
    view.banner = "";
    placed = false;
    if (client.status === "open") client.reset(mode);
    else client.connect();
  };

  modeBtn.onclick = () =>
    newTrial(mode === "preemptive" ? "reactive" : "preemptive");
  trialBtn.onclick = () => newTrial();
  fusedBox.onchange = () => (view.showFused = fusedBox.checked);

  canvas.onpointermove = (ev) => {
    const r = canvas.getBoundingClientRect();
    const u = ((ev.clientX - r.left) / r.width) * canvas.width;
    const v = ((ev.clientY - r.top) / r.height) * canvas.height;
    cursor = view.canvasToTable(u, v);
  };
  canvas.onpointerleave = () => (cursor = null);
  canvas.onpointerdown = () => {
    if (cursor && !placed && client.status === "open") {
      client.place(synth.clampToWorkspace(cursor));
      placed = true;
    }
  };

  // fixed-rate frames; ticks are dropped while disconnected or idle
  const ticker = new Ticker(DEFAULT_SYNTH.rateHz);
  ticker.start(() => {
    if (cursor && client.status === "open") client.send(synth.tick(cursor));
  });

  const frame = () => {
    for (const msg of client.drain()) view.apply(msg);
    view.render();
    bannerEl.textContent = view.banner;
    bannerEl.style.display = view.banner ? "block" : "none";
    const m = formatMetrics(view.metrics);
    outResponse.textContent = m.response;
    outGrab.textContent = m.grab;
    outError.textContent = m.error;
    requestAnimationFrame(frame);
  };

  client.connect();
  newTrial();
  requestAnimationFrame(frame);
}

window.addEventListener("load", main);
