/** Browser entry point: wires the session client to the DOM.
 *
 * Keyboard map:
 *   ArrowLeft / ArrowRight   steer (rate-based, 1.0 units/s)
 *   ArrowUp / ArrowDown      speed setpoint
 *   p                        toggle the collision-avoidance proxy
 *   r                        toggle recording
 *   x                        reset the world
 *   1 / 2 / 3                label the selected range left / none / right
 *
 * One interval pumps coalesced input at 30 Hz; rendering runs on
 * requestAnimationFrame and just draws the latest view, so display rate and
 * message rate stay independent.
 */

import { decodeFlowBase64 } from "./fgmv.js";
import { LabelCursor } from "./labels.js";
import { LabelClass } from "./protocol.js";
import { drawDecision, drawFlow, drawSteer, drawWorld } from "./render.js";
import { SessionClient, WebSocketLike } from "./session.js";

const FLOW_MAX_MAGNITUDE = 16.0;
const INPUT_HZ = 30;

function element<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) {
    throw new Error(`missing element #${id}`);
  }
  return found as T;
}

function context(id: string): CanvasRenderingContext2D {
  const ctx = element<HTMLCanvasElement>(id).getContext("2d");
  if (!ctx) {
    throw new Error(`no 2d context for #${id}`);
  }
  return ctx;
}

function serviceUrl(): string {
  const override = new URLSearchParams(location.search).get("ws");
  return override ?? "ws://127.0.0.1:8765";
}

function main(): void {
  const worldCtx = context("world");
  const flowCtx = context("flow");
  const steerCtx = context("steer");
  const decisionCtx = context("decision");
  const banner = element<HTMLDivElement>("banner");
  const statusLine = element<HTMLDivElement>("status");
  const statsLine = element<HTMLDivElement>("stats");
  const eventsBox = element<HTMLPreElement>("events");
  const labelStart = element<HTMLInputElement>("label-start");
  const labelEnd = element<HTMLInputElement>("label-end");

  const client = new SessionClient(serviceUrl(), (url) => {
    return new WebSocket(url) as unknown as WebSocketLike;
  });
  const cursor = new LabelCursor();
  client.connect();

  const holdFor: Record<string, "left" | "right" | "faster" | "slower"> = {
    ArrowLeft: "left",
    ArrowRight: "right",
    ArrowUp: "faster",
    ArrowDown: "slower",
  };

  function applyLabel(klass: LabelClass): void {
    cursor.setRange(Number(labelStart.value), Number(labelEnd.value));
    cursor.setPending(klass);
    if (!client.sendLabel(cursor.start, cursor.end, cursor.pending)) {
      banner.textContent = `label [${cursor.start}, ${cursor.end}] out of range`;
    }
  }

  window.addEventListener("keydown", (ev) => {
    if (ev.target instanceof HTMLInputElement) {
      return;
    }
    const hold = holdFor[ev.key];
    if (hold) {
      ev.preventDefault();
      client.input.hold(hold);
      return;
    }
    if (ev.repeat) {
      return;
    }
    switch (ev.key) {
      case "p":
        client.input.toggleProxy();
        break;
      case "r":
        client.setRecording(!(client.view.state?.recording ?? false));
        break;
      case "x":
        client.requestReset();
        break;
      case "1":
        applyLabel("left");
        break;
      case "2":
        applyLabel("none");
        break;
      case "3":
        applyLabel("right");
        break;
    }
  });
  window.addEventListener("keyup", (ev) => {
    const hold = holdFor[ev.key];
    if (hold) {
      client.input.release(hold);
    }
  });
  window.addEventListener("blur", () => client.input.releaseAll());

  let lastPump = performance.now();
  setInterval(() => {
    const now = performance.now();
    client.pumpInput((now - lastPump) / 1000);
    lastPump = now;
  }, 1000 / INPUT_HZ);

  function renderOnce(): void {
    const view = client.view;
    banner.textContent = view.banner ?? "";
    banner.style.visibility = view.banner ? "visible" : "hidden";

    const input = client.input.snapshot;
    const state = view.state;
    const parts = [
      `link: ${view.phase}`,
      `scenario: ${view.world?.scenario ?? "?"}`,
      `tick: ${state?.tick ?? "-"}`,
      `steer in: ${input.steer.toFixed(2)}`,
      `speed in: ${input.speed.toFixed(2)}`,
      `proxy: ${input.proxy_on ? "on" : "off"}`,
      `recording: ${state?.recording ? "yes" : "no"}`,
      `session frames: ${state?.session_frames ?? 0}`,
    ];
    statusLine.textContent = parts.join("  |  ");
    const stats = view.stats;
    statsLine.textContent = stats
      ? `ticks ${stats.ticks}  collisions ${stats.collisions}  inferences ${stats.inferences}  ` +
        `skipped ${stats.skipped}  input errors ${stats.input_errors}`
      : "no stats yet";
    eventsBox.textContent = view.eventLog.slice(-12).join("\n");

    if (view.world) {
      drawWorld(worldCtx, view.world, state);
    }
    if (view.world && state) {
      try {
        const frame = decodeFlowBase64(state.flow, view.world.grid.cols, view.world.grid.rows);
        drawFlow(flowCtx, frame, FLOW_MAX_MAGNITUDE);
      } catch {
        // leave the previous frame up rather than tearing the panel down
      }
    }
    drawSteer(steerCtx, state);
    drawDecision(decisionCtx, state?.decision ?? null);
    requestAnimationFrame(renderOnce);
  }
  requestAnimationFrame(renderOnce);
}

main();
