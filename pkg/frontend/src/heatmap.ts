/** Heatmap rendering core, DOM-free so it is testable in plain Node.
 *
 * Color ramp over raw counts 0..4095, piecewise-linear between stops:
 *
 *   raw    0  -> #14141c  (cold background)
 *   raw 1024  -> #2048c8  (blue)
 *   raw 2048  -> #20b4a8  (cyan)
 *   raw 3072  -> #e0cc28  (yellow)
 *   raw 4095  -> #e03028  (red)
 *
 * One pixel per sensor node; nodes are square (12.7 mm pitch on both
 * axes), so drawing the buffer at its native aspect keeps the walkway
 * proportions. Image x spans the walkway length (tile * 48 + col), image
 * y spans its width (row).
 */

import { PITCH_M, TILE_COLS, TILE_ROWS, type PressureFrame } from "./protocol";

const STOPS: Array<[number, [number, number, number]]> = [
  [0, [0x14, 0x14, 0x1c]],
  [1024, [0x20, 0x48, 0xc8]],
  [2048, [0x20, 0xb4, 0xa8]],
  [3072, [0xe0, 0xcc, 0x28]],
  [4095, [0xe0, 0x30, 0x28]],
];

export function rampColor(raw: number): [number, number, number] {
  const x = Math.min(Math.max(raw, 0), 4095);
  for (let i = 1; i < STOPS.length; i += 1) {
    const [x1, c1] = STOPS[i];
    if (x <= x1) {
      const [x0, c0] = STOPS[i - 1];
      const t = (x - x0) / (x1 - x0);
      return [
        Math.round(c0[0] + t * (c1[0] - c0[0])),
        Math.round(c0[1] + t * (c1[1] - c0[1])),
        Math.round(c0[2] + t * (c1[2] - c0[2])),
      ];
    }
  }
  return STOPS[STOPS.length - 1][1];
}

export interface HeatmapSize {
  width: number;
  height: number;
}

export function frameSize(tileCount: number): HeatmapSize {
  return { width: tileCount * TILE_COLS, height: TILE_ROWS };
}

/** RGBA pixels for a frame, row-major over the full walkway image. */
export function framePixels(frame: PressureFrame): Uint8ClampedArray {
  const { width, height } = frameSize(frame.tileCount);
  const pixels = new Uint8ClampedArray(width * height * 4);
  for (let tile = 0; tile < frame.tileCount; tile += 1) {
    for (let row = 0; row < TILE_ROWS; row += 1) {
      for (let col = 0; col < TILE_COLS; col += 1) {
        const raw = frame.values[(tile * TILE_ROWS + row) * TILE_COLS + col];
        const [r, g, b] = rampColor(raw);
        const px = (row * width + tile * TILE_COLS + col) * 4;
        pixels[px] = r;
        pixels[px + 1] = g;
        pixels[px + 2] = b;
        pixels[px + 3] = 255;
      }
    }
  }
  return pixels;
}

/** Uniform background for the no-frames-yet case. */
export function blankPixels(tileCount: number): Uint8ClampedArray {
  const { width, height } = frameSize(tileCount);
  const [r, g, b] = rampColor(0);
  const pixels = new Uint8ClampedArray(width * height * 4);
  for (let px = 0; px < pixels.length; px += 4) {
    pixels[px] = r;
    pixels[px + 1] = g;
    pixels[px + 2] = b;
    pixels[px + 3] = 255;
  }
  return pixels;
}

/** World metres to the node cell whose center is nearest; node (t, r, c)
 * is centred at ((t*48+c)+0.5, (r+0.5)) * pitch, matching the engine. */
export function worldToCell(x: number, y: number):
    { col: number; row: number } {
  return {
    col: Math.round(x / PITCH_M - 0.5),
    row: Math.round(y / PITCH_M - 0.5),
  };
}

/** Pixel-column span of an obstacle: its front edge sits at x with the
 * standard 0.10 m depth extending down-walkway. */
export const OBSTACLE_DEPTH_M = 0.1;

export function obstacleSpan(x: number): { start: number; end: number } {
  return {
    start: Math.round(x / PITCH_M),
    end: Math.round((x + OBSTACLE_DEPTH_M) / PITCH_M),
  };
}
