// Candidate-score shading: normalize to the [min, max] of the current
// list, so colors show contrast within one decision, not absolute scale.

import type { Candidate } from './types.js';

export function heatmapAlphas(candidates: Candidate[]): Map<string, number> {
  const out = new Map<string, number>();
  if (candidates.length === 0) return out;
  const scores = candidates.map((c) => c.score);
  const lo = Math.min(...scores);
  const hi = Math.max(...scores);
  for (const c of candidates) {
    const alpha = hi === lo ? 1.0 : (c.score - lo) / (hi - lo);
    out.set(`${c.row},${c.col}`, alpha);
  }
  return out;
}
