/** Frame-range selection for labeling recorded session frames.
 *
 * A range [start, end] is inclusive on both ends and must sit inside the
 * recorded session, so [10, 20] covers 11 frames. Validation happens
 * client-side before anything is sent; the server applies the same rule and
 * a relabel simply overwrites.
 */

import { LABEL_CLASSES, LabelClass } from "./protocol.js";

export function isValidRange(start: number, end: number, frameCount: number): boolean {
  return (
    Number.isInteger(start) &&
    Number.isInteger(end) &&
    start >= 0 &&
    start <= end &&
    end < frameCount
  );
}

export function rangeLength(start: number, end: number): number {
  return end - start + 1;
}

export class LabelCursor {
  start = 0;
  end = 0;
  pending: LabelClass = "none";

  setRange(start: number, end: number): void {
    this.start = start;
    this.end = end;
  }

  setPending(klass: LabelClass): void {
    if (!LABEL_CLASSES.includes(klass)) {
      throw new Error(`unknown label class ${JSON.stringify(klass)}`);
    }
    this.pending = klass;
  }

  isValidFor(frameCount: number): boolean {
    return isValidRange(this.start, this.end, frameCount);
  }

  get length(): number {
    return rangeLength(this.start, this.end);
  }
}
