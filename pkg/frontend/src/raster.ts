/**
 * Tiny deterministic software rasterizer.
 *
 * The console's scene is a list of plain draw ops (see render.ts). In the
 * browser those ops go to a 2D canvas; in tests they go through this
 * rasterizer instead, which fills the same shapes into an RGBA buffer with
 * integer pixel-center sampling and no anti-aliasing. That makes rendered
 * output byte-reproducible across platforms, so a golden frame can be
 * pinned by hash.
 */

export type Rgba = [number, number, number, number];
export type Point = [number, number];

export class Raster {
  readonly w: number;
  readonly h: number;
  readonly data: Uint8ClampedArray;

  constructor(w: number, h: number) {
    if (!Number.isInteger(w) || !Number.isInteger(h) || w <= 0 || h <= 0) {
      throw new Error(`raster size must be positive integers, got ${w}x${h}`);
    }
    this.w = w;
    this.h = h;
    this.data = new Uint8ClampedArray(w * h * 4);
  }

  clear(color: Rgba): void {
    const [r, g, b, a] = color;
    const d = this.data;
    for (let i = 0; i < d.length; i += 4) {
      d[i] = r;
      d[i + 1] = g;
      d[i + 2] = b;
      d[i + 3] = a;
    }
  }

  private set(x: number, y: number, color: Rgba): void {
    const i = (y * this.w + x) * 4;
    this.data[i] = color[0];
    this.data[i + 1] = color[1];
    this.data[i + 2] = color[2];
    this.data[i + 3] = color[3];
  }

  pixel(x: number, y: number): Rgba {
    if (x < 0 || y < 0 || x >= this.w || y >= this.h) {
      throw new Error(`pixel (${x}, ${y}) outside ${this.w}x${this.h}`);
    }
    const i = (y * this.w + x) * 4;
    const d = this.data;
    return [d[i]!, d[i + 1]!, d[i + 2]!, d[i + 3]!];
  }

  /** Fill an axis-aligned rectangle given in float coords, clipped to bounds. */
  fillRect(x: number, y: number, w: number, h: number, color: Rgba): void {
    // A pixel is covered when its center (px + 0.5, py + 0.5) lies inside
    // the half-open box [x, x + w) x [y, y + h).
    const x0 = Math.max(0, Math.ceil(x - 0.5));
    const y0 = Math.max(0, Math.ceil(y - 0.5));
    const x1 = Math.min(this.w, Math.ceil(x + w - 0.5));
    const y1 = Math.min(this.h, Math.ceil(y + h - 0.5));
    for (let py = y0; py < y1; py++) {
      for (let px = x0; px < x1; px++) {
        this.set(px, py, color);
      }
    }
  }

  /** Fill a polygon by even-odd scanline sampling at pixel centers. */
  fillPoly(pts: Point[], color: Rgba): void {
    if (pts.length < 3) return;
    let minY = Infinity;
    let maxY = -Infinity;
    for (const [, v] of pts) {
      if (v < minY) minY = v;
      if (v > maxY) maxY = v;
    }
    const y0 = Math.max(0, Math.ceil(minY - 0.5));
    const y1 = Math.min(this.h - 1, Math.floor(maxY - 0.5));
    const xs: number[] = [];
    for (let py = y0; py <= y1; py++) {
      const cy = py + 0.5;
      xs.length = 0;
      for (let i = 0; i < pts.length; i++) {
        const [ax, ay] = pts[i]!;
        const [bx, by] = pts[(i + 1) % pts.length]!;
        // Half-open edge rule in y avoids double-counting shared vertices.
        if ((ay <= cy && by > cy) || (by <= cy && ay > cy)) {
          xs.push(ax + ((cy - ay) / (by - ay)) * (bx - ax));
        }
      }
      xs.sort((a, b) => a - b);
      for (let i = 0; i + 1 < xs.length; i += 2) {
        const px0 = Math.max(0, Math.ceil(xs[i]! - 0.5));
        const px1 = Math.min(this.w, Math.ceil(xs[i + 1]! - 0.5));
        for (let px = px0; px < px1; px++) {
          this.set(px, py, color);
        }
      }
    }
  }
}

/** FNV-1a over the RGBA buffer; cheap, stable fingerprint for goldens. */
export function bufferDigest(r: Raster): string {
  let h = 0x811c9dc5;
  const d = r.data;
  for (let i = 0; i < d.length; i++) {
    h ^= d[i]!;
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return h.toString(16).padStart(8, "0");
}
