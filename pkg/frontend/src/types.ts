// Message schemas for the realtime placement service, both directions.

export type Mode = "reactive" | "preemptive";

export interface FrameMsg {
  type: "frame";
  t: number;
  palm: [number, number, number];
  elbow: [number, number, number];
  shoulder: [number, number, number];
  head_pos: [number, number, number];
  head_rot: number[]; // row-major 3x3, 9 numbers
}

export interface PlaceMsg {
  type: "place";
  point: [number, number];
}

export interface ResetMsg {
  type: "reset";
  mode?: Mode;
}

export interface CloseMsg {
  type: "close";
}

export type ClientMsg = FrameMsg | PlaceMsg | ResetMsg | CloseMsg;

export interface RobotMsg {
  type: "robot";
  t: number;
  pose: [number, number, number];
  gripper: "open" | "closed";
  action: "idle" | "predictive" | "definitive" | "grasped";
  goal: [number, number] | null;
  preempted: boolean;
}

export interface HeatmapMsg {
  type: "heatmap";
  t: number;
  values: number[][];
  fused: number[][];
  peak: { p: number; cell: [number, number] };
}

export interface MetricsMsg {
  type: "metrics";
  response_time: number | null;
  start_to_grab: number;
  error_grids: number | null;
}

export interface ErrorMsg {
  type: "error";
  detail: string;
}

export type ServerMsg = RobotMsg | HeatmapMsg | MetricsMsg | ErrorMsg;

const SERVER_TYPES = new Set(["robot", "heatmap", "metrics", "error"]);

/** Parse one inbound message; null for anything malformed (no throw). */
export function parseServerMsg(raw: string): ServerMsg | null {
  let msg: unknown;
  try {
    msg = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof msg !== "object" || msg === null) return null;
  const type = (msg as { type?: unknown }).type;
  if (typeof type !== "string" || !SERVER_TYPES.has(type)) return null;
  if (type === "heatmap") {
    const h = msg as HeatmapMsg;
    if (!Array.isArray(h.values) || !Array.isArray(h.values[0])) return null;
    if (!Array.isArray(h.fused) || !Array.isArray(h.fused[0])) return null;
  }
  return msg as ServerMsg;
}
