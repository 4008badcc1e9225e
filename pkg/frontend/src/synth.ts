// Turns a cursor position into the service's "frame" messages: palm at
// the cursor, arm trailing behind it, and a head whose tilted gaze ray
// leads the cursor along its smoothed velocity, like the recorded data
// the predictor was trained on.

import { TILT_BASE, Vec3, normalize, rotationAligning } from "./geometry.js";
import { FrameMsg } from "./types.js";

export interface SynthConfig {
  rateHz: number;
  leadSeconds: number; // gaze looks this far ahead along the velocity
  carryHeight: number; // palm z while carrying
  headPos: Vec3;
  shoulder: Vec3;
  workspace: { x: [number, number]; y: [number, number] };
  velocitySmoothing: number; // EMA weight on the newest velocity sample
}

export const DEFAULT_SYNTH: SynthConfig = {
  rateHz: 20,
  leadSeconds: 0.3,
  carryHeight: 0.12,
  headPos: [0.2, 1.05, 0.45],
  shoulder: [0.25, 0.95, 0.35],
  workspace: { x: [-0.1, 0.5], y: [-0.25, 0.9] },
  velocitySmoothing: 0.3,
};

function clamp(v: number, lo: number, hi: number): number {
  return Math.min(Math.max(v, lo), hi);
}

export class CursorSynth {
  private t = 0;
  private started = false;
  private prev: [number, number] | null = null;
  private vel: [number, number] = [0, 0];

  constructor(readonly cfg: SynthConfig = DEFAULT_SYNTH) {}

  /** Restart the clock and motion state (after a session reset). */
  reset(): void {
    this.t = 0;
    this.started = false;
    this.prev = null;
    this.vel = [0, 0];
  }

  clampToWorkspace(point: [number, number]): [number, number] {
    const { x, y } = this.cfg.workspace;
    return [clamp(point[0], x[0], x[1]), clamp(point[1], y[0], y[1])];
  }

  /** One fixed-rate tick; cursor is in table meters. */
  tick(cursor: [number, number]): FrameMsg {
    const dt = 1 / this.cfg.rateHz;
    const [cx, cy] = this.clampToWorkspace(cursor);
    if (this.prev !== null) {
      const a = this.cfg.velocitySmoothing;
      this.vel = [
        (1 - a) * this.vel[0] + (a * (cx - this.prev[0])) / dt,
        (1 - a) * this.vel[1] + (a * (cy - this.prev[1])) / dt,
      ];
    }
    this.prev = [cx, cy];
    const t = this.started ? this.t + dt : 0;
    this.t = t;
    this.started = true;

    const palm: Vec3 = [cx, cy, this.cfg.carryHeight];
    const sh = this.cfg.shoulder;
    const elbow: Vec3 = [
      0.55 * cx + 0.45 * sh[0],
      0.55 * cy + 0.45 * sh[1],
      0.55 * this.cfg.carryHeight + 0.45 * sh[2],
    ];
    const look = this.clampToWorkspace([
      cx + this.cfg.leadSeconds * this.vel[0],
      cy + this.cfg.leadSeconds * this.vel[1],
    ]);
    const head = this.cfg.headPos;
    const gaze = normalize([look[0] - head[0], look[1] - head[1], -head[2]]);
    return {
      type: "frame",
      t,
      palm,
      elbow,
      shoulder: [sh[0], sh[1], sh[2]],
      head_pos: [head[0], head[1], head[2]],
      head_rot: rotationAligning(TILT_BASE, gaze),
    };
  }
}

/** Fixed-rate driver; the callback sees the tick index. */
export class Ticker {
  private handle: ReturnType<typeof setInterval> | null = null;
  private count = 0;

  constructor(readonly rateHz: number) {}

  start(fn: (tick: number) => void): void {
    this.stop();
    this.count = 0;
    this.handle = setInterval(() => fn(this.count++), 1000 / this.rateHz);
  }

  stop(): void {
    if (this.handle !== null) clearInterval(this.handle);
    this.handle = null;
  }

  get running(): boolean {
    return this.handle !== null;
  }
}
