/** Keyboard input state with rate-based steering.
 *
 * Holding a steering key moves the setpoint at STEER_RATE units per second,
 * clamped to [0, 1]; speed keys behave the same against [0, maxSpeed]. The
 * tracker integrates on advance() and hands out one snapshot per change, so
 * a quiet operator produces no traffic and a saturated axis stops producing
 * updates once it hits the clamp.
 */

export type Hold = "left" | "right" | "faster" | "slower";

export interface InputSnapshot {
  steer: number;
  speed: number;
  proxy_on: boolean;
}

export const STEER_RATE = 1.0; // full-scale units per second
export const SPEED_RATE = 1.0; // setpoint units per second

export class InputTracker {
  private steer = 0.5;
  private speed = 0.0;
  private proxyOn = false;
  private readonly held = new Set<Hold>();
  private changed = false;

  constructor(private readonly maxSpeed: number = 2.0) {}

  hold(control: Hold): void {
    this.held.add(control);
  }

  release(control: Hold): void {
    this.held.delete(control);
  }

  releaseAll(): void {
    this.held.clear();
  }

  toggleProxy(): void {
    this.proxyOn = !this.proxyOn;
    this.changed = true;
  }

  /** Integrate held controls over dt seconds. */
  advance(dtSeconds: number): void {
    if (dtSeconds <= 0) {
      return;
    }
    const steerDir = Number(this.held.has("right")) - Number(this.held.has("left"));
    const speedDir = Number(this.held.has("faster")) - Number(this.held.has("slower"));
    if (steerDir !== 0) {
      const next = clamp(this.steer + steerDir * STEER_RATE * dtSeconds, 0.0, 1.0);
      if (next !== this.steer) {
        this.steer = next;
        this.changed = true;
      }
    }
    if (speedDir !== 0) {
      const next = clamp(this.speed + speedDir * SPEED_RATE * dtSeconds, 0.0, this.maxSpeed);
      if (next !== this.speed) {
        this.speed = next;
        this.changed = true;
      }
    }
  }

  /** Current values without consuming the pending-change flag. */
  get snapshot(): InputSnapshot {
    return { steer: this.steer, speed: this.speed, proxy_on: this.proxyOn };
  }

  /** The latest snapshot if anything changed since the last take, else null. */
  takeIfChanged(): InputSnapshot | null {
    if (!this.changed) {
      return null;
    }
    this.changed = false;
    return this.snapshot;
  }
}

function clamp(x: number, lo: number, hi: number): number {
  return Math.min(Math.max(x, lo), hi);
}
