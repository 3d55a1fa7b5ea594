/** Client-side decoder for the motion-vector flow payload carried in state
 * messages.
 *
 * The payload is the raw record array, no header:
 *
 *     REC: dx i8 | dy i8 | sad u16le        (4 bytes per macroblock)
 *
 * Records are row-major, `rows` x `wireCols`. Encoders emit either the
 * logical grid (`wireCols == cols`) or the hardware layout with one zero pad
 * column per row (`wireCols == cols + 1`); the pad column is dropped on
 * decode. Which layout is in use is inferred from the payload length.
 */

export const RECORD_SIZE = 4;

export interface FlowFrame {
  cols: number;
  rows: number;
  /** Row-major, length cols * rows, pad column removed. */
  dx: Int8Array;
  dy: Int8Array;
  sad: Uint16Array;
}

export class FgmvError extends Error {}

/** Decode standard base64 into bytes (works in browsers and Node). */
export function base64ToBytes(b64: string): Uint8Array {
  let binary: string;
  try {
    binary = atob(b64);
  } catch {
    throw new FgmvError("invalid base64 payload");
  }
  const out = new Uint8Array(binary.length);
  for (let i = 0; i < binary.length; i++) {
    out[i] = binary.charCodeAt(i);
  }
  return out;
}

/** Number of record columns actually on the wire for this payload. */
export function inferWireCols(byteLength: number, cols: number, rows: number): number {
  if (rows <= 0 || cols <= 0) {
    throw new FgmvError(`grid must be positive, got ${cols}x${rows}`);
  }
  for (const wireCols of [cols, cols + 1]) {
    if (byteLength === rows * wireCols * RECORD_SIZE) {
      return wireCols;
    }
  }
  throw new FgmvError(
    `payload is ${byteLength} bytes, expected ${rows}x${cols} or ${rows}x${cols + 1} records`,
  );
}

export function decodeFlowPayload(payload: Uint8Array, cols: number, rows: number): FlowFrame {
  const wireCols = inferWireCols(payload.byteLength, cols, rows);
  const view = new DataView(payload.buffer, payload.byteOffset, payload.byteLength);
  const n = cols * rows;
  const dx = new Int8Array(n);
  const dy = new Int8Array(n);
  const sad = new Uint16Array(n);
  for (let r = 0; r < rows; r++) {
    for (let c = 0; c < cols; c++) {
      const off = (r * wireCols + c) * RECORD_SIZE;
      const i = r * cols + c;
      dx[i] = view.getInt8(off);
      dy[i] = view.getInt8(off + 1);
      sad[i] = view.getUint16(off + 2, true);
    }
  }
  return { cols, rows, dx, dy, sad };
}

export function decodeFlowBase64(b64: string, cols: number, rows: number): FlowFrame {
  return decodeFlowPayload(base64ToBytes(b64), cols, rows);
}
