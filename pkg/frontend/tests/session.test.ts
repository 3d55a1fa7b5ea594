import { describe, expect, it } from "vitest";

import { SessionClient, WebSocketLike } from "../src/session.js";
import { stateJson, worldJson } from "./protocol.test.js";

class FakeSocket implements WebSocketLike {
  onopen: (() => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: (() => void) | null = null;
  sent: string[] = [];
  closeCalls = 0;

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.closeCalls += 1;
  }

  open(): void {
    this.onopen?.();
  }

  push(msg: Record<string, unknown>): void {
    this.onmessage?.({ data: JSON.stringify(msg) });
  }

  drop(): void {
    this.onclose?.();
  }
}

interface Scheduled {
  fn: () => void;
  ms: number;
}

function makeClient(opts: { retryMs?: number } = {}) {
  const sockets: FakeSocket[] = [];
  const scheduled: Scheduled[] = [];
  let now = 0;
  const client = new SessionClient(
    "ws://test",
    () => {
      const socket = new FakeSocket();
      sockets.push(socket);
      return socket;
    },
    {
      retryMs: opts.retryMs ?? 100,
      nowMs: () => now,
      schedule: (fn, ms) => scheduled.push({ fn, ms }),
    },
  );
  return {
    client,
    sockets,
    scheduled,
    socket: () => sockets[sockets.length - 1],
    tick: (ms: number) => {
      now += ms;
    },
  };
}

function openLive(rig: ReturnType<typeof makeClient>): FakeSocket {
  rig.client.connect();
  const socket = rig.socket();
  socket.open();
  socket.push(worldJson());
  return socket;
}

describe("SessionClient connection lifecycle", () => {
  it("reaches live and mirrors world, state, and stats", () => {
    const rig = makeClient();
    rig.client.connect();
    expect(rig.client.view.phase).toBe("connecting");
    const socket = rig.socket();
    socket.open();
    expect(rig.client.view.phase).toBe("live");

    socket.push(worldJson());
    socket.push(stateJson(3));
    socket.push({
      type: "stats",
      ticks: 30,
      collisions: 0,
      inferences: 10,
      skipped: 20,
      input_errors: 0,
      session_frames: 0,
    });

    expect(rig.client.view.world?.scenario).toBe("frontal_wall");
    expect(rig.client.view.state?.tick).toBe(3);
    expect(rig.client.view.stats?.ticks).toBe(30);
  });

  it("retries with a fresh socket after an unexpected close", () => {
    const rig = makeClient({ retryMs: 250 });
    openLive(rig);
    rig.socket().drop();

    expect(rig.client.view.phase).toBe("retrying");
    expect(rig.client.view.banner).toContain("retrying");
    expect(rig.scheduled).toHaveLength(1);
    expect(rig.scheduled[0].ms).toBe(250);

    rig.scheduled[0].fn();
    expect(rig.sockets).toHaveLength(2);
    rig.socket().open();
    expect(rig.client.view.phase).toBe("live");
    expect(rig.client.view.banner).toBeNull();
  });

  it("stays closed after close() even if the socket drops later", () => {
    const rig = makeClient();
    const socket = openLive(rig);
    rig.client.close();
    expect(rig.client.view.phase).toBe("closed");
    expect(socket.closeCalls).toBe(1);
    socket.drop();
    expect(rig.client.view.phase).toBe("closed");
    rig.scheduled.forEach((s) => s.fn());
    expect(rig.sockets).toHaveLength(1);
  });

  it("counts junk messages without dying", () => {
    const rig = makeClient();
    const socket = openLive(rig);
    socket.onmessage?.({ data: "garbage" });
    socket.push({ type: "mystery" });
    socket.push(stateJson(9));
    expect(rig.client.view.protocolErrors).toBe(2);
    expect(rig.client.view.state?.tick).toBe(9);
  });
});

describe("SessionClient input pump", () => {
  it("sends nothing while the operator is idle", () => {
    const rig = makeClient();
    const socket = openLive(rig);
    for (let i = 0; i < 60; i++) {
      rig.tick(33);
      rig.client.pumpInput(1 / 30);
    }
    expect(socket.sent).toHaveLength(0);
  });

  it("sends one coalesced snapshot per interval", () => {
    const rig = makeClient();
    const socket = openLive(rig);
    rig.client.input.hold("right");

    rig.tick(40);
    expect(rig.client.pumpInput(0.1)).not.toBeNull();
    expect(socket.sent).toHaveLength(1);

    // Two pumps inside the same interval: state advances, nothing is sent.
    expect(rig.client.pumpInput(0.1)).toBeNull();
    expect(rig.client.pumpInput(0.1)).toBeNull();
    expect(socket.sent).toHaveLength(1);

    // The next interval carries all four advances in one message.
    rig.tick(40);
    const snapshot = rig.client.pumpInput(0.1);
    expect(snapshot).not.toBeNull();
    expect(socket.sent).toHaveLength(2);
    const sent = JSON.parse(socket.sent[1]);
    expect(sent.type).toBe("input");
    expect(sent.steer).toBeCloseTo(0.9, 9);
    expect(sent.speed).toBe(0.0);
    expect(sent.proxy_on).toBe(false);
  });

  it("flushes a proxy toggle on the next pump", () => {
    const rig = makeClient();
    const socket = openLive(rig);
    rig.client.input.toggleProxy();
    rig.tick(40);
    rig.client.pumpInput(1 / 30);
    expect(socket.sent).toHaveLength(1);
    expect(JSON.parse(socket.sent[0]).proxy_on).toBe(true);
  });

  it("does not send while disconnected", () => {
    const rig = makeClient();
    rig.client.connect();
    rig.client.input.hold("right");
    rig.tick(40);
    expect(rig.client.pumpInput(0.1)).toBeNull();
    expect(rig.socket().sent).toHaveLength(0);
  });
});

describe("SessionClient labeling", () => {
  it("sends only ranges inside the recorded session", () => {
    const rig = makeClient();
    const socket = openLive(rig);
    expect(rig.client.sendLabel(0, 0, "left")).toBe(false);

    socket.push(stateJson(5, { session_frames: 21, recording: true }));
    expect(rig.client.sendLabel(10, 20, "left")).toBe(true);
    expect(JSON.parse(socket.sent[0])).toEqual({
      type: "label",
      start: 10,
      end: 20,
      klass: "left",
    });

    expect(rig.client.sendLabel(10, 21, "left")).toBe(false);
    expect(rig.client.sendLabel(-1, 5, "left")).toBe(false);
    expect(socket.sent).toHaveLength(1);
  });

  it("records label confirmations and rejections from events", () => {
    const rig = makeClient();
    const socket = openLive(rig);
    socket.push(
      stateJson(6, {
        events: [
          { kind: "labeled", start: 10, end: 20, klass: "left" },
          { kind: "label_rejected", reason: "range or class" },
        ],
      }),
    );
    expect(rig.client.view.labeled).toEqual([{ start: 10, end: 20, klass: "left" }]);
    expect(rig.client.view.rejectedLabels).toBe(1);
  });
});

describe("SessionClient event surfacing", () => {
  it("raises a banner in the same state message as a collision", () => {
    const rig = makeClient();
    const socket = openLive(rig);
    socket.push(stateJson(42, { events: [{ kind: "collision", tick: 42 }] }));
    expect(rig.client.view.lastCollisionTick).toBe(42);
    expect(rig.client.view.banner).toContain("collision");
  });

  it("surfaces session save results", () => {
    const rig = makeClient();
    const socket = openLive(rig);
    socket.push(stateJson(50, { events: [{ kind: "session_saved", frames: 120 }] }));
    expect(rig.client.view.banner).toBe("session saved (120 frames)");
  });

  it("sends record and reset commands only while live", () => {
    const rig = makeClient();
    expect(rig.client.setRecording(true)).toBe(false);
    expect(rig.client.requestReset()).toBe(false);

    const socket = openLive(rig);
    expect(rig.client.setRecording(true)).toBe(true);
    expect(rig.client.requestReset()).toBe(true);
    expect(JSON.parse(socket.sent[0])).toEqual({ type: "record", on: true });
    expect(JSON.parse(socket.sent[1])).toEqual({ type: "reset" });
  });
});
