/** Wire types for the drive-service websocket.
 *
 * Server to client:
 *   world  - once per connection, static scenario description
 *   state  - one per simulation tick
 *   stats  - periodic counters
 *
 * Client to server (JSON, one object per message):
 *   {"type": "input", "steer": s, "speed": v, "proxy_on": b}
 *   {"type": "reset"}
 *   {"type": "label", "start": i, "end": j, "klass": "left"}   (inclusive)
 *   {"type": "record", "on": true}
 *
 * Input messages are full snapshots, so resending the latest one is always
 * safe and skipped messages never lose information.
 */

export type LabelClass = "left" | "none" | "right";
export const LABEL_CLASSES: readonly LabelClass[] = ["left", "none", "right"];

export interface WorldCircle {
  kind: "circle";
  cx: number;
  cy: number;
  r: number;
}

export interface WorldWall {
  kind: "wall";
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export type WorldObstacle = WorldCircle | WorldWall;

export interface WorldMsg {
  type: "world";
  scenario: string;
  /** xmin, ymin, xmax, ymax. */
  bounds: [number, number, number, number];
  obstacles: WorldObstacle[];
  grid: { cols: number; rows: number };
  fps: number;
  proxy_available: boolean;
}

export interface Decision {
  klass: LabelClass;
  probs: number[];
  skipped: boolean;
}

export interface ServerEvent {
  kind: string;
  [key: string]: unknown;
}

export interface StateMsg {
  type: "state";
  tick: number;
  pose: { x: number; y: number; heading: number; speed: number };
  steer: { desired: number; final: number; proxy_on: boolean; speed_setpoint: number };
  decision: Decision | null;
  /** Base64 motion-vector payload for the flow panel. */
  flow: string;
  events: ServerEvent[];
  recording: boolean;
  session_frames: number;
}

export interface StatsMsg {
  type: "stats";
  ticks: number;
  collisions: number;
  inferences: number;
  skipped: number;
  input_errors: number;
  session_frames: number;
}

export type ServerMsg = WorldMsg | StateMsg | StatsMsg;

export class ProtocolError extends Error {}

function asObject(value: unknown, what: string): Record<string, unknown> {
  if (typeof value !== "object" || value === null || Array.isArray(value)) {
    throw new ProtocolError(`${what} is not an object`);
  }
  return value as Record<string, unknown>;
}

function asNumber(value: unknown, what: string): number {
  if (typeof value !== "number" || !Number.isFinite(value)) {
    throw new ProtocolError(`${what} is not a finite number`);
  }
  return value;
}

function asBool(value: unknown, what: string): boolean {
  if (typeof value !== "boolean") {
    throw new ProtocolError(`${what} is not a boolean`);
  }
  return value;
}

function asString(value: unknown, what: string): string {
  if (typeof value !== "string") {
    throw new ProtocolError(`${what} is not a string`);
  }
  return value;
}

function checkWorld(msg: Record<string, unknown>): WorldMsg {
  asString(msg.scenario, "world.scenario");
  const bounds = msg.bounds;
  if (!Array.isArray(bounds) || bounds.length !== 4) {
    throw new ProtocolError("world.bounds is not a 4-list");
  }
  bounds.forEach((b, i) => asNumber(b, `world.bounds[${i}]`));
  if (!Array.isArray(msg.obstacles)) {
    throw new ProtocolError("world.obstacles is not a list");
  }
  const grid = asObject(msg.grid, "world.grid");
  asNumber(grid.cols, "world.grid.cols");
  asNumber(grid.rows, "world.grid.rows");
  asNumber(msg.fps, "world.fps");
  asBool(msg.proxy_available, "world.proxy_available");
  return msg as unknown as WorldMsg;
}

function checkState(msg: Record<string, unknown>): StateMsg {
  asNumber(msg.tick, "state.tick");
  const pose = asObject(msg.pose, "state.pose");
  for (const field of ["x", "y", "heading", "speed"]) {
    asNumber(pose[field], `state.pose.${field}`);
  }
  const steer = asObject(msg.steer, "state.steer");
  asNumber(steer.desired, "state.steer.desired");
  asNumber(steer.final, "state.steer.final");
  asBool(steer.proxy_on, "state.steer.proxy_on");
  asNumber(steer.speed_setpoint, "state.steer.speed_setpoint");
  if (msg.decision !== null) {
    const decision = asObject(msg.decision, "state.decision");
    asString(decision.klass, "state.decision.klass");
    if (!Array.isArray(decision.probs)) {
      throw new ProtocolError("state.decision.probs is not a list");
    }
    asBool(decision.skipped, "state.decision.skipped");
  }
  asString(msg.flow, "state.flow");
  if (!Array.isArray(msg.events)) {
    throw new ProtocolError("state.events is not a list");
  }
  asBool(msg.recording, "state.recording");
  asNumber(msg.session_frames, "state.session_frames");
  return msg as unknown as StateMsg;
}

function checkStats(msg: Record<string, unknown>): StatsMsg {
  for (const field of ["ticks", "collisions", "inferences", "skipped", "input_errors", "session_frames"]) {
    asNumber(msg[field], `stats.${field}`);
  }
  return msg as unknown as StatsMsg;
}

/** Parse and validate one server message; throws ProtocolError on junk. */
export function parseServerMsg(text: string): ServerMsg {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    throw new ProtocolError("message is not JSON");
  }
  const msg = asObject(raw, "message");
  switch (msg.type) {
    case "world":
      return checkWorld(msg);
    case "state":
      return checkState(msg);
    case "stats":
      return checkStats(msg);
    default:
      throw new ProtocolError(`unknown message type ${JSON.stringify(msg.type)}`);
  }
}

export function inputMsg(steer: number, speed: number, proxyOn: boolean): string {
  return JSON.stringify({ type: "input", steer, speed, proxy_on: proxyOn });
}

export function resetMsg(): string {
  return JSON.stringify({ type: "reset" });
}

export function labelMsg(start: number, end: number, klass: LabelClass): string {
  return JSON.stringify({ type: "label", start, end, klass });
}

export function recordMsg(on: boolean): string {
  return JSON.stringify({ type: "record", on });
}
