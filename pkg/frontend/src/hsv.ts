/** Flow-to-color rule shared with the server-side renderer.
 *
 * Hue encodes direction (atan2(v, u) in degrees), value encodes magnitude
 * saturating at maxMagnitude, saturation is fixed at 1. Bytes are produced
 * with round-half-to-even so the panel is pixel-identical to the server's
 * PPM render of the same frame.
 */

import { FlowFrame } from "./fgmv.js";

/** np.round semantics: ties go to the even integer. */
export function roundHalfToEven(x: number): number {
  const floor = Math.floor(x);
  const diff = x - floor;
  if (diff > 0.5) {
    return floor + 1;
  }
  if (diff < 0.5) {
    return floor;
  }
  return floor % 2 === 0 ? floor : floor + 1;
}

function byteOf(channel: number): number {
  return Math.min(Math.max(roundHalfToEven(channel * 255.0), 0), 255);
}

/** RGB byte triple for one flow vector. */
export function hsvPixel(u: number, v: number, maxMagnitude: number): [number, number, number] {
  if (maxMagnitude <= 0) {
    throw new Error(`maxMagnitude must be positive, got ${maxMagnitude}`);
  }
  const degrees = (Math.atan2(v, u) * 180.0) / Math.PI;
  const hue = ((degrees % 360.0) + 360.0) % 360.0;
  const value = Math.min(Math.hypot(u, v) / maxMagnitude, 1.0);

  const h = (hue % 360.0) / 60.0;
  const i = Math.floor(h) % 6;
  const f = h - Math.floor(h);
  const s = 1.0;
  const p = value * (1.0 - s);
  const q = value * (1.0 - s * f);
  const t = value * (1.0 - s * (1.0 - f));
  const r = [value, q, p, p, t, value][i];
  const g = [t, value, value, q, p, p][i];
  const b = [p, p, t, value, value, q][i];
  return [byteOf(r), byteOf(g), byteOf(b)];
}

/** Row-major RGB bytes (length cols*rows*3) for a decoded frame at scale 1. */
export function flowToRgb(frame: FlowFrame, maxMagnitude: number): Uint8Array {
  const out = new Uint8Array(frame.cols * frame.rows * 3);
  for (let i = 0; i < frame.cols * frame.rows; i++) {
    const [r, g, b] = hsvPixel(frame.dx[i], frame.dy[i], maxMagnitude);
    out[i * 3] = r;
    out[i * 3 + 1] = g;
    out[i * 3 + 2] = b;
  }
  return out;
}

/** RGBA pixels ready for a canvas ImageData buffer. */
export function flowToRgba(frame: FlowFrame, maxMagnitude: number): Uint8ClampedArray<ArrayBuffer> {
  const rgb = flowToRgb(frame, maxMagnitude);
  const out = new Uint8ClampedArray(frame.cols * frame.rows * 4);
  for (let i = 0; i < frame.cols * frame.rows; i++) {
    out[i * 4] = rgb[i * 3];
    out[i * 4 + 1] = rgb[i * 3 + 1];
    out[i * 4 + 2] = rgb[i * 3 + 2];
    out[i * 4 + 3] = 255;
  }
  return out;
}
