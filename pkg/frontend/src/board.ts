// Board rendering: an N x N grid of cells derived entirely from the
// latest snapshot, with optional candidate heatmap and winning line.

import { heatmapAlphas } from './heatmap.js';
import type { Explanation, Snapshot } from './types.js';

export interface BoardCallbacks {
  onCellClick(row: number, col: number): void;
}

export function renderBoard(
  container: HTMLElement,
  snapshot: Snapshot,
  explanation: Explanation | null,
  clickable: boolean,
  callbacks: BoardCallbacks,
): void {
  const size = snapshot.size;
  container.innerHTML = '';
  container.style.setProperty('--board-size', String(size));

  const alphas = explanation ? heatmapAlphas(explanation.candidates) : new Map<string, number>();
  const scores = new Map<string, number>();
  explanation?.candidates.forEach((c) => scores.set(`${c.row},${c.col}`, c.score));
  const winning = new Set(snapshot.status.line.map(([r, c]) => `${r},${c}`));
  const chosen = explanation ? `${explanation.chosen.row},${explanation.chosen.col}` : '';
  const last = snapshot.history[snapshot.history.length - 1];

  for (let row = 0; row < size; row++) {
    for (let col = 0; col < size; col++) {
      const key = `${row},${col}`;
      const value = snapshot.cells[row * size + col];
      const cell = document.createElement('div');
      cell.className = 'cell';
      cell.dataset.row = String(row);
      cell.dataset.col = String(col);

      const alpha = alphas.get(key);
      if (alpha !== undefined) {
        cell.classList.add('candidate');
        cell.style.setProperty('--heat', String(0.12 + 0.55 * alpha));
        cell.title = `score ${scores.get(key)!.toFixed(2)}`;
      }
      if (key === chosen) cell.classList.add('chosen');
      if (winning.has(key)) cell.classList.add('winning');

      if (value !== 0) {
        const stone = document.createElement('div');
        stone.className = value === 1 ? 'stone black' : 'stone white';
        if (last && last.row === row && last.col === col) stone.classList.add('last');
        cell.appendChild(stone);
      } else if (clickable) {
        cell.classList.add('playable');
        cell.addEventListener('click', () => callbacks.onCellClick(row, col));
      }
      container.appendChild(cell);
    }
  }
}
