/** Websocket session against the drive service.
 *
 * The client keeps a SessionView that mirrors only what the server said:
 * pose, steering, decisions, recording state and counters all come from
 * server messages, never from local prediction. Outbound input snapshots are
 * coalesced to at most one per send interval; since each snapshot carries the
 * full input state, dropping intermediate ones is lossless.
 *
 * On an unexpected close the client flags the view and retries with a fresh
 * socket after retryMs; a close() by the caller stays closed.
 */

import { InputSnapshot, InputTracker } from "./input.js";
import { isValidRange } from "./labels.js";
import {
  LabelClass,
  ProtocolError,
  ServerEvent,
  ServerMsg,
  StateMsg,
  StatsMsg,
  WorldMsg,
  inputMsg,
  labelMsg,
  parseServerMsg,
  recordMsg,
  resetMsg,
} from "./protocol.js";

export interface WebSocketLike {
  onopen: (() => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
  send(data: string): void;
  close(): void;
}

export type SocketFactory = (url: string) => WebSocketLike;

export type ConnectionPhase = "idle" | "connecting" | "live" | "retrying" | "closed";

export interface AppliedLabel {
  start: number;
  end: number;
  klass: LabelClass;
}

export interface SessionView {
  phase: ConnectionPhase;
  /** Attention line for the operator; null when all is well. */
  banner: string | null;
  world: WorldMsg | null;
  state: StateMsg | null;
  stats: StatsMsg | null;
  lastCollisionTick: number | null;
  /** Labels the server confirmed, oldest first. */
  labeled: AppliedLabel[];
  rejectedLabels: number;
  protocolErrors: number;
  eventLog: string[];
}

export interface SessionOptions {
  retryMs?: number;
  minSendIntervalMs?: number;
  nowMs?: () => number;
  schedule?: (fn: () => void, ms: number) => void;
}

const EVENT_LOG_LIMIT = 50;

export class SessionClient {
  readonly input = new InputTracker();
  readonly view: SessionView = {
    phase: "idle",
    banner: null,
    world: null,
    state: null,
    stats: null,
    lastCollisionTick: null,
    labeled: [],
    rejectedLabels: 0,
    protocolErrors: 0,
    eventLog: [],
  };

  private socket: WebSocketLike | null = null;
  private userClosed = false;
  private lastSendMs = -Infinity;
  private readonly retryMs: number;
  private readonly minSendIntervalMs: number;
  private readonly nowMs: () => number;
  private readonly schedule: (fn: () => void, ms: number) => void;

  constructor(
    private readonly url: string,
    private readonly factory: SocketFactory,
    opts: SessionOptions = {},
  ) {
    this.retryMs = opts.retryMs ?? 1000;
    this.minSendIntervalMs = opts.minSendIntervalMs ?? 1000 / 30;
    this.nowMs = opts.nowMs ?? (() => Date.now());
    this.schedule = opts.schedule ?? ((fn, ms) => void setTimeout(fn, ms));
  }

  connect(): void {
    this.userClosed = false;
    this.view.phase = "connecting";
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.view.phase = "live";
      this.view.banner = null;
    };
    socket.onmessage = (ev) => {
      const text = typeof ev.data === "string" ? ev.data : String(ev.data);
      this.handleMessage(text);
    };
    socket.onerror = () => {
      // The close handler owns recovery; nothing to do here.
    };
    socket.onclose = () => {
      if (this.socket !== socket) {
        return; // a stale socket from before a reconnect
      }
      this.socket = null;
      if (this.userClosed) {
        this.view.phase = "closed";
        return;
      }
      this.view.phase = "retrying";
      this.view.banner = "connection lost, retrying";
      this.schedule(() => {
        if (!this.userClosed && this.socket === null) {
          this.connect();
        }
      }, this.retryMs);
    };
  }

  close(): void {
    this.userClosed = true;
    this.view.phase = "closed";
    if (this.socket) {
      this.socket.close();
      this.socket = null;
    }
  }

  get isLive(): boolean {
    return this.view.phase === "live" && this.socket !== null;
  }

  /** Advance the input tracker and send one coalesced snapshot if due. */
  pumpInput(dtSeconds: number): InputSnapshot | null {
    this.input.advance(dtSeconds);
    if (!this.isLive) {
      return null;
    }
    const now = this.nowMs();
    if (now - this.lastSendMs < this.minSendIntervalMs) {
      return null; // keep coalescing; the change flag stays pending
    }
    const snapshot = this.input.takeIfChanged();
    if (snapshot === null) {
      return null;
    }
    this.lastSendMs = now;
    this.send(inputMsg(snapshot.steer, snapshot.speed, snapshot.proxy_on));
    return snapshot;
  }

  /** Validate a label range against the recorded session and send it. */
  sendLabel(start: number, end: number, klass: LabelClass): boolean {
    const frames = this.view.state?.session_frames ?? 0;
    if (!isValidRange(start, end, frames) || !this.isLive) {
      return false;
    }
    this.send(labelMsg(start, end, klass));
    return true;
  }

  setRecording(on: boolean): boolean {
    if (!this.isLive) {
      return false;
    }
    this.send(recordMsg(on));
    return true;
  }

  requestReset(): boolean {
    if (!this.isLive) {
      return false;
    }
    this.send(resetMsg());
    return true;
  }

  private send(text: string): void {
    this.socket?.send(text);
  }

  private handleMessage(text: string): void {
    let msg: ServerMsg;
    try {
      msg = parseServerMsg(text);
    } catch (err) {
      if (err instanceof ProtocolError) {
        this.view.protocolErrors += 1;
        return;
      }
      throw err;
    }
    switch (msg.type) {
      case "world":
        this.view.world = msg;
        break;
      case "state":
        this.applyState(msg);
        break;
      case "stats":
        this.applyStats(msg);
        break;
    }
  }

  private applyState(msg: StateMsg): void {
    this.view.state = msg;
    for (const event of msg.events) {
      this.applyEvent(event, msg.tick);
    }
  }

  private applyStats(msg: StatsMsg): void {
    this.view.stats = msg;
  }

  private applyEvent(event: ServerEvent, tick: number): void {
    switch (event.kind) {
      case "collision": {
        const at = typeof event.tick === "number" ? event.tick : tick;
        this.view.lastCollisionTick = at;
        this.view.banner = `collision at tick ${at}`;
        this.log(`collision at tick ${at}`);
        break;
      }
      case "labeled": {
        const { start, end, klass } = event as unknown as AppliedLabel;
        this.view.labeled.push({ start, end, klass });
        this.log(`labeled [${start}, ${end}] as ${klass}`);
        break;
      }
      case "label_rejected":
        this.view.rejectedLabels += 1;
        this.log(`label rejected: ${String(event.reason)}`);
        break;
      case "session_saved":
        this.view.banner = `session saved (${String(event.frames)} frames)`;
        this.log(`session saved with ${String(event.frames)} frames`);
        break;
      case "session_save_failed":
        this.view.banner = `session save failed: ${String(event.reason)}`;
        this.log(this.view.banner);
        break;
      case "recording":
        this.log(event.on ? "recording on" : "recording off");
        break;
      case "reset":
        this.log("world reset");
        break;
      default:
        this.log(`event: ${event.kind}`);
    }
  }

  private log(line: string): void {
    this.view.eventLog.push(line);
    if (this.view.eventLog.length > EVENT_LOG_LIMIT) {
      this.view.eventLog.shift();
    }
  }
}
