// Canvas renderer. Every number shown comes straight from a server
// message; the view only formats and draws.

import { HeatmapMsg, MetricsMsg, RobotMsg, ServerMsg } from "./types.js";

// the slice of CanvasRenderingContext2D the view touches, fakeable in tests
export interface Ctx2D {
  fillStyle: unknown;
  strokeStyle: unknown;
  lineWidth: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
}

export interface ViewConfig {
  width: number;
  height: number;
  table: { x0: number; y0: number; extentX: number; extentY: number };
  gamma: number; // peak outline threshold, matches the arbiter default
}

export const DEFAULT_VIEW: Omit<ViewConfig, "width" | "height"> = {
  table: { x0: 0, y0: 0, extentX: 0.4, extentY: 0.8 },
  gamma: 0.05,
};

const TRAIL = 120; // robot poses kept for the path ghost
const FLASH_FRAMES = 8;

export class View {
  lastHeatmap: HeatmapMsg | null = null;
  lastRobot: RobotMsg | null = null;
  metrics: MetricsMsg | null = null;
  banner = "";
  showFused = true;
  private trail: [number, number][] = [];
  private flash = 0;

  constructor(readonly ctx: Ctx2D, readonly cfg: ViewConfig) {}

  /** [rows, cols] of the most recent heatmap message, or null. */
  gridShape(): [number, number] | null {
    if (!this.lastHeatmap) return null;
    const v = this.lastHeatmap.values;
    return [v.length, v[0]!.length];
  }

  apply(msg: ServerMsg): void {
    if (msg.type === "heatmap") this.lastHeatmap = msg;
    else if (msg.type === "robot") {
      this.lastRobot = msg;
      this.trail.push([msg.pose[0], msg.pose[1]]);
      if (this.trail.length > TRAIL) this.trail.shift();
      if (msg.preempted) this.flash = FLASH_FRAMES;
    } else if (msg.type === "metrics") this.metrics = msg;
    else this.banner = msg.detail;
  }

  noteMalformed(raw: string): void {
    this.banner = `malformed message: ${raw.slice(0, 60)}`;
  }

  clearTrial(): void {
    this.lastHeatmap = null;
    this.lastRobot = null;
    this.metrics = null;
    this.trail = [];
    this.flash = 0;
  }

  // -- table <-> canvas -----------------------------------------------------

  tableToCanvas(x: number, y: number): [number, number] {
    const t = this.cfg.table;
    return [
      ((y - t.y0) / t.extentY) * this.cfg.width,
      ((x - t.x0) / t.extentX) * this.cfg.height,
    ];
  }

  canvasToTable(u: number, v: number): [number, number] {
    const t = this.cfg.table;
    return [
      t.x0 + (v / this.cfg.height) * t.extentX,
      t.y0 + (u / this.cfg.width) * t.extentY,
    ];
  }

  // -- layers ---------------------------------------------------------------

  render(): void {
    this.ctx.clearRect(0, 0, this.cfg.width, this.cfg.height);
    this.drawTable();
    this.drawHeatmap();
    this.drawRobot();
  }

  drawTable(): void {
    this.ctx.fillStyle = "#18202b";
    this.ctx.fillRect(0, 0, this.cfg.width, this.cfg.height);
  }

  /** Shades one rect per heatmap cell; dimensions come from the message. */
  drawHeatmap(): void {
    const msg = this.lastHeatmap;
    if (!msg) return;
    const grid = this.showFused ? msg.fused : msg.values;
    const rows = grid.length;
    const cols = grid[0]!.length;
    const cw = this.cfg.width / cols;
    const ch = this.cfg.height / rows;
    for (let i = 0; i < rows; i++) {
      for (let j = 0; j < cols; j++) {
        const p = Math.min(Math.max(grid[i]![j]!, 0), 1);
        this.ctx.fillStyle = `rgba(255, 150, 40, ${(p * 0.85).toFixed(4)})`;
        this.ctx.fillRect(j * cw, i * ch, cw, ch);
      }
    }
    for (let i = 0; i <= rows; i++) {
      this.ctx.strokeStyle = "#2c3a4d";
      this.ctx.lineWidth = 1;
      this.ctx.beginPath();
      this.ctx.moveTo(0, i * ch);
      this.ctx.lineTo(this.cfg.width, i * ch);
      this.ctx.stroke();
    }
    for (let j = 0; j <= cols; j++) {
      this.ctx.strokeStyle = "#2c3a4d";
      this.ctx.lineWidth = 1;
      this.ctx.beginPath();
      this.ctx.moveTo(j * cw, 0);
      this.ctx.lineTo(j * cw, this.cfg.height);
      this.ctx.stroke();
    }
    if (msg.peak.p > this.cfg.gamma) {
      const [pi, pj] = msg.peak.cell;
      this.ctx.strokeStyle = "#ffd34d";
      this.ctx.lineWidth = 2;
      this.ctx.strokeRect(pj * cw, pi * ch, cw, ch);
    }
  }

  drawRobot(): void {
    const msg = this.lastRobot;
    if (!msg) return;
    if (this.trail.length > 1) {
      this.ctx.strokeStyle = "rgba(120, 200, 255, 0.35)";
      this.ctx.lineWidth = 2;
      this.ctx.beginPath();
      const [u0, v0] = this.tableToCanvas(this.trail[0]![0], this.trail[0]![1]);
      this.ctx.moveTo(u0, v0);
      for (const [x, y] of this.trail.slice(1)) {
        const [u, v] = this.tableToCanvas(x, y);
        this.ctx.lineTo(u, v);
      }
      this.ctx.stroke();
    }
    if (msg.goal && msg.action === "predictive" && this.lastHeatmap) {
      // highlight the grid cell the predictive goal falls in
      const rows = this.lastHeatmap.values.length;
      const cols = this.lastHeatmap.values[0]!.length;
      const t = this.cfg.table;
      const i = Math.min(
        Math.max(Math.floor(((msg.goal[0] - t.x0) / t.extentX) * rows), 0),
        rows - 1,
      );
      const j = Math.min(
        Math.max(Math.floor(((msg.goal[1] - t.y0) / t.extentY) * cols), 0),
        cols - 1,
      );
      this.ctx.strokeStyle = "#7dff9b";
      this.ctx.lineWidth = 2;
      this.ctx.strokeRect(
        (j * this.cfg.width) / cols,
        (i * this.cfg.height) / rows,
        this.cfg.width / cols,
        this.cfg.height / rows,
      );
    }
    if (msg.goal) {
      const [gu, gv] = this.tableToCanvas(msg.goal[0], msg.goal[1]);
      this.ctx.strokeStyle = msg.action === "definitive" ? "#ff7d7d" : "#7dff9b";
      this.ctx.lineWidth = 1.5;
      this.ctx.beginPath();
      this.ctx.arc(gu, gv, 6, 0, 2 * Math.PI);
      this.ctx.stroke();
    }
    const [u, v] = this.tableToCanvas(msg.pose[0], msg.pose[1]);
    this.ctx.fillStyle = msg.gripper === "closed" ? "#9be9ff" : "#4fa3d1";
    this.ctx.beginPath();
    this.ctx.arc(u, v, 7, 0, 2 * Math.PI);
    this.ctx.fill();
    if (this.flash > 0) {
      this.flash -= 1;
      this.ctx.strokeStyle = "#ff4d4d";
      this.ctx.lineWidth = 3;
      this.ctx.beginPath();
      this.ctx.arc(u, v, 12 + 2 * (FLASH_FRAMES - this.flash), 0, 2 * Math.PI);
      this.ctx.stroke();
    }
  }
}

/** Exact message values, formatted for the readout panel. */
export function formatMetrics(m: MetricsMsg | null): {
  response: string;
  grab: string;
  error: string;
} {
  if (!m) return { response: "-", grab: "-", error: "-" };
  return {
    response: m.response_time === null ? "n/a" : `${m.response_time.toFixed(3)} s`,
    grab: `${m.start_to_grab.toFixed(3)} s`,
    error: m.error_grids === null ? "n/a" : `${m.error_grids.toFixed(2)} grids`,
  };
}
