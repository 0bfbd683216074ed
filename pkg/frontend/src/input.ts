/**
 * Keyboard pedal model.
 *
 * Arrow-up (or W) ramps the throttle while held, arrow-down (or S) ramps
 * the brake; both are clamped to [0, 1] and both can be nonzero at once,
 * the gateway sorts out what that means. Holding a key integrates at
 * RAMP_PER_S, so half a second of up-arrow yields throttle 0.5. Releasing
 * decays at RELEASE_PER_S rather than snapping to zero; a key tap then
 * reads as a short pedal pulse instead of a single-frame spike.
 */

export const RAMP_PER_S = 1.0;
export const RELEASE_PER_S = 3.0;

const THROTTLE_KEYS = new Set(["ArrowUp", "KeyW"]);
const BRAKE_KEYS = new Set(["ArrowDown", "KeyS"]);

function clamp01(v: number): number {
  return v < 0 ? 0 : v > 1 ? 1 : v;
}

export class Pedals {
  throttle = 0;
  brake = 0;
  private upHeld = false;
  private downHeld = false;

  /** Feed a KeyboardEvent.code plus whether it was keydown or keyup. */
  key(code: string, down: boolean): boolean {
    if (THROTTLE_KEYS.has(code)) {
      this.upHeld = down;
      return true;
    }
    if (BRAKE_KEYS.has(code)) {
      this.downHeld = down;
      return true;
    }
    return false;
  }

  /** Advance the ramps by dt seconds. */
  step(dt: number): void {
    this.throttle = clamp01(
      this.throttle + (this.upHeld ? RAMP_PER_S : -RELEASE_PER_S) * dt,
    );
    this.brake = clamp01(
      this.brake + (this.downHeld ? RAMP_PER_S : -RELEASE_PER_S) * dt,
    );
  }

  releaseAll(): void {
    // Window blur drops keyup events; treat it as all keys released.
    this.upHeld = false;
    this.downHeld = false;
  }
}
