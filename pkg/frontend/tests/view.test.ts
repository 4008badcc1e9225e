import { describe, expect, it } from "vitest";

import { HeatmapMsg, MetricsMsg, RobotMsg, parseServerMsg } from "../src/types.js";
import { Ctx2D, DEFAULT_VIEW, View, formatMetrics } from "../src/view.js";

interface Rect {
  x: number;
  y: number;
  w: number;
  h: number;
  style: string;
}

function fakeCtx() {
  const ctx = {
    fillStyle: "" as unknown,
    strokeStyle: "" as unknown,
    lineWidth: 0,
    fills: [] as Rect[],
    strokes: [] as Rect[],
    clearRect() {},
    fillRect(x: number, y: number, w: number, h: number) {
      ctx.fills.push({ x, y, w, h, style: String(ctx.fillStyle) });
    },
    strokeRect(x: number, y: number, w: number, h: number) {
      ctx.strokes.push({ x, y, w, h, style: String(ctx.strokeStyle) });
    },
    beginPath() {},
    moveTo() {},
    lineTo() {},
    arc() {},
    stroke() {},
    fill() {},
  };
  return ctx as typeof ctx & Ctx2D;
}

function makeView(ctx: Ctx2D) {
  return new View(ctx, { width: 800, height: 400, ...DEFAULT_VIEW });
}

function heatmap(rows: number, cols: number, fill = 0, peakP = 0): HeatmapMsg {
  const values = Array.from({ length: rows }, () => Array(cols).fill(fill));
  return {
    type: "heatmap",
    t: 0.5,
    values,
    fused: values.map((r) => [...r]),
    peak: { p: peakP, cell: [0, 0] },
  };
}

describe("heatmap layer", () => {
  it("draws exactly one cell per entry of the last message", () => {
    const ctx = fakeCtx();
    const view = makeView(ctx);
    view.apply(heatmap(5, 10));
    view.drawHeatmap();
    expect(view.gridShape()).toEqual([5, 10]);
    expect(ctx.fills).toHaveLength(50);

    ctx.fills.length = 0;
    view.apply(heatmap(2, 3));
    view.drawHeatmap();
    expect(view.gridShape()).toEqual([2, 3]);
    expect(ctx.fills).toHaveLength(6);
  });

  it("shades an all-zero map uniformly", () => {
    const ctx = fakeCtx();
    const view = makeView(ctx);
    view.apply(heatmap(5, 10, 0));
    view.drawHeatmap();
    const styles = new Set(ctx.fills.map((r) => r.style));
    expect(styles.size).toBe(1);
  });

  it("outlines the peak cell only above the launch threshold", () => {
    const ctx = fakeCtx();
    const view = makeView(ctx);
    view.apply(heatmap(5, 10, 0.01, 0.04));
    view.drawHeatmap();
    expect(ctx.strokes).toHaveLength(0);
    view.apply(heatmap(5, 10, 0.01, 0.06));
    view.drawHeatmap();
    expect(ctx.strokes).toHaveLength(1);
  });

  it("raw/fused toggle switches the shaded layer", () => {
    const ctx = fakeCtx();
    const view = makeView(ctx);
    const msg = heatmap(1, 2, 0.5);
    msg.values[0] = [1, 1];
    msg.fused[0] = [0, 0];
    view.apply(msg);
    view.showFused = true;
    view.drawHeatmap();
    const fusedStyles = ctx.fills.map((r) => r.style);
    ctx.fills.length = 0;
    view.showFused = false;
    view.drawHeatmap();
    expect(ctx.fills.map((r) => r.style)).not.toEqual(fusedStyles);
  });
});

describe("robot layer", () => {
  const robot = (over: Partial<RobotMsg>): RobotMsg => ({
    type: "robot",
    t: 1,
    pose: [0.2, -0.15, 0.2],
    gripper: "open",
    action: "idle",
    goal: null,
    preempted: false,
    ...over,
  });

  it("highlights the goal cell while predictive", () => {
    const ctx = fakeCtx();
    const view = makeView(ctx);
    view.apply(heatmap(5, 10, 0.01));
    view.apply(robot({ action: "predictive", goal: [0.2, 0.44] }));
    view.drawRobot();
    // cell (2, 5) of a 5x10 grid on an 800x400 canvas
    const hit = ctx.strokes.find(
      (r) => r.x === 400 && r.y === 160 && r.w === 80 && r.h === 80,
    );
    expect(hit).toBeDefined();
  });

  it("does not highlight a cell when idle or definitive", () => {
    const ctx = fakeCtx();
    const view = makeView(ctx);
    view.apply(heatmap(5, 10, 0.01));
    view.apply(robot({ action: "definitive", goal: [0.2, 0.44] }));
    view.drawRobot();
    expect(ctx.strokes).toHaveLength(0);
  });
});

describe("truth comes from messages", () => {
  it("metrics readout equals the message values exactly", () => {
    const ctx = fakeCtx();
    const view = makeView(ctx);
    const msg: MetricsMsg = {
      type: "metrics",
      response_time: 0.55,
      start_to_grab: 3.1700000000000004,
      error_grids: 1,
    };
    view.apply(msg);
    expect(view.metrics).toBe(msg);
    const text = formatMetrics(view.metrics);
    expect(text.response).toBe("0.550 s");
    expect(text.grab).toBe("3.170 s");
    expect(text.error).toBe("1.00 grids");
    expect(formatMetrics(null)).toEqual({ response: "-", grab: "-", error: "-" });
    expect(
      formatMetrics({ ...msg, response_time: null, error_grids: null }).response,
    ).toBe("n/a");
  });

  it("malformed input raises the banner and never throws", () => {
    const ctx = fakeCtx();
    const view = makeView(ctx);
    for (const raw of ["not json", "[1,2]", '{"type":"nope"}', '{"type":"heatmap"}']) {
      expect(parseServerMsg(raw)).toBeNull();
      view.noteMalformed(raw);
      expect(view.banner).toContain("malformed");
    }
    view.apply({ type: "error", detail: "object outside workspace" });
    expect(view.banner).toBe("object outside workspace");
    view.render(); // no heatmap, no robot: still fine
  });

  it("canvas/table transforms round-trip", () => {
    const view = makeView(fakeCtx());
    const [u, v] = view.tableToCanvas(0.3, 0.61);
    const [x, y] = view.canvasToTable(u, v);
    expect(x).toBeCloseTo(0.3, 12);
    expect(y).toBeCloseTo(0.61, 12);
  });
});
