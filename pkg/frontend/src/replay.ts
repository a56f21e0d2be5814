// Frame derivation for the replay browser: frame k is the board after k
// moves (frame 0 is empty), each paired with the turn that produced it.

import type { ReplayData, ReplayTurn } from './types.js';

export interface Frame {
  index: number; // moves applied so far
  cells: number[];
  lastTurn: ReplayTurn | null;
}

export function buildFrames(replay: ReplayData): Frame[] {
  const n = replay.board_size * replay.board_size;
  const frames: Frame[] = [
    { index: 0, cells: new Array(n).fill(0), lastTurn: null },
  ];
  let cells = frames[0].cells;
  replay.turns.forEach((turn, i) => {
    cells = cells.slice();
    cells[turn.row * replay.board_size + turn.col] = turn.player;
    frames.push({ index: i + 1, cells, lastTurn: turn });
  });
  return frames;
}

export function clampFrame(frames: Frame[], index: number): number {
  return Math.max(0, Math.min(frames.length - 1, index));
}
