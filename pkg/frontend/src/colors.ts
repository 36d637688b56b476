/** Shared palette: one pure color mapping used identically by every view.
 *
 * Real is blue, fake is orange; correct predictions are green, incorrect
 * red. Sector saturation maps classifier confidence linearly from pale at
 * 0.5 to full strength at 1.0.
 */

import type { Label } from "./types";

export const REAL_BLUE = "#4393c3";
export const FAKE_ORANGE = "#e08214";
export const CORRECT_GREEN = "#59a14f";
export const INCORRECT_RED = "#e15759";
export const SELECTION_GOLD = "#d4a017";

/** Minimum color strength at confidence 0.5 (never fully white). */
const PALE_FLOOR = 0.25;

export function classColor(label: Label): string {
  return label === 0 ? REAL_BLUE : FAKE_ORANGE;
}

export function correctnessColor(correct: boolean): string {
  return correct ? CORRECT_GREEN : INCORRECT_RED;
}

function hexChannels(hex: string): [number, number, number] {
  const v = parseInt(hex.slice(1), 16);
  return [(v >> 16) & 0xff, (v >> 8) & 0xff, v & 0xff];
}

/** Linear pale-to-full ramp over confidence in [0.5, 1]. */
export function confidenceStrength(confidence: number): number {
  const t = Math.min(1, Math.max(0, (confidence - 0.5) / 0.5));
  return PALE_FLOOR + (1 - PALE_FLOOR) * t;
}

/** Desaturate toward white for uncertain sectors. */
export function applyConfidence(hex: string, confidence: number | null): string {
  const strength = confidenceStrength(confidence ?? 0.5);
  const [r, g, b] = hexChannels(hex);
  const mix = (c: number) => Math.round(255 - (255 - c) * strength);
  return `rgb(${mix(r)}, ${mix(g)}, ${mix(b)})`;
}
