/** Canvas drawing for the cockpit panels. Pure consumers of SessionView. */

import { FlowFrame } from "./fgmv.js";
import { flowToRgba } from "./hsv.js";
import { Decision, StateMsg, WorldMsg } from "./protocol.js";

let flowScratch: HTMLCanvasElement | null = null;

/** Blit one pixel per macroblock, scaled up without smoothing. */
export function drawFlow(
  ctx: CanvasRenderingContext2D,
  frame: FlowFrame,
  maxMagnitude: number,
): void {
  if (flowScratch === null) {
    flowScratch = document.createElement("canvas");
  }
  flowScratch.width = frame.cols;
  flowScratch.height = frame.rows;
  const scratchCtx = flowScratch.getContext("2d");
  if (!scratchCtx) {
    return;
  }
  const image = new ImageData(flowToRgba(frame, maxMagnitude), frame.cols, frame.rows);
  scratchCtx.putImageData(image, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.fillStyle = "#000";
  ctx.fillRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  ctx.drawImage(flowScratch, 0, 0, ctx.canvas.width, ctx.canvas.height);
}

export function drawWorld(
  ctx: CanvasRenderingContext2D,
  world: WorldMsg,
  state: StateMsg | null,
): void {
  const { width, height } = ctx.canvas;
  const [xmin, ymin, xmax, ymax] = world.bounds;
  const margin = 12;
  const scale = Math.min((width - 2 * margin) / (xmax - xmin), (height - 2 * margin) / (ymax - ymin));
  // World y grows up, canvas y grows down.
  const toX = (x: number) => margin + (x - xmin) * scale;
  const toY = (y: number) => height - margin - (y - ymin) * scale;

  ctx.fillStyle = "#11151c";
  ctx.fillRect(0, 0, width, height);
  ctx.strokeStyle = "#3a4656";
  ctx.lineWidth = 2;
  ctx.strokeRect(toX(xmin), toY(ymax), (xmax - xmin) * scale, (ymax - ymin) * scale);

  ctx.strokeStyle = "#7f8ea3";
  for (const obstacle of world.obstacles) {
    if (obstacle.kind === "circle") {
      ctx.beginPath();
      ctx.arc(toX(obstacle.cx), toY(obstacle.cy), obstacle.r * scale, 0, 2 * Math.PI);
      ctx.stroke();
    } else {
      ctx.beginPath();
      ctx.moveTo(toX(obstacle.x1), toY(obstacle.y1));
      ctx.lineTo(toX(obstacle.x2), toY(obstacle.y2));
      ctx.stroke();
    }
  }

  if (state) {
    const { x, y, heading } = state.pose;
    const size = 10;
    ctx.save();
    ctx.translate(toX(x), toY(y));
    ctx.rotate(-heading); // canvas rotation is clockwise, heading is ccw
    ctx.fillStyle = "#e4b93c";
    ctx.beginPath();
    ctx.moveTo(size, 0);
    ctx.lineTo(-size * 0.6, size * 0.5);
    ctx.lineTo(-size * 0.6, -size * 0.5);
    ctx.closePath();
    ctx.fill();
    ctx.restore();
  }
}

/** Horizontal steering gauge with desired and final markers. */
export function drawSteer(ctx: CanvasRenderingContext2D, state: StateMsg | null): void {
  const { width, height } = ctx.canvas;
  ctx.fillStyle = "#11151c";
  ctx.fillRect(0, 0, width, height);
  ctx.strokeStyle = "#3a4656";
  ctx.strokeRect(4, height / 2 - 6, width - 8, 12);
  ctx.fillStyle = "#3a4656";
  ctx.fillRect(width / 2 - 1, height / 2 - 10, 2, 20);
  if (!state) {
    return;
  }
  const posOf = (steer: number) => 4 + steer * (width - 8);
  ctx.fillStyle = "#6fa8dc";
  ctx.fillRect(posOf(state.steer.desired) - 2, height / 2 - 12, 4, 24);
  ctx.fillStyle = "#e4b93c";
  ctx.fillRect(posOf(state.steer.final) - 2, height / 2 - 8, 4, 16);
}

/** Class-probability bars for the latest proxy decision. */
export function drawDecision(ctx: CanvasRenderingContext2D, decision: Decision | null): void {
  const { width, height } = ctx.canvas;
  ctx.fillStyle = "#11151c";
  ctx.fillRect(0, 0, width, height);
  if (!decision) {
    ctx.fillStyle = "#7f8ea3";
    ctx.font = "12px monospace";
    ctx.fillText("proxy off", 8, height / 2);
    return;
  }
  const names = ["left", "none", "right"];
  const barWidth = width / 3 - 12;
  decision.probs.forEach((p, i) => {
    const x = 8 + i * (barWidth + 12);
    const barHeight = Math.max(1, p * (height - 24));
    ctx.fillStyle = names[i] === decision.klass ? "#e4b93c" : "#46586e";
    ctx.fillRect(x, height - 16 - barHeight, barWidth, barHeight);
    ctx.fillStyle = "#7f8ea3";
    ctx.font = "11px monospace";
    ctx.fillText(names[i], x, height - 4);
  });
  if (decision.skipped) {
    ctx.fillStyle = "#7f8ea3";
    ctx.font = "11px monospace";
    ctx.fillText("held", width - 36, 12);
  }
}
