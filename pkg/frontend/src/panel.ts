// Explanation side panel: strategy / logic labels plus candidate list.

import type { Explanation, Snapshot, ViewState } from './types.js';

export function renderExplanation(container: HTMLElement, explanation: Explanation | null): void {
  if (!explanation || explanation.candidates.length === 0) {
    container.hidden = true;
    return;
  }
  container.hidden = false;
  container.innerHTML = '';
  const title = document.createElement('h3');
  title.textContent = 'AI reasoning';
  const strategy = document.createElement('p');
  strategy.innerHTML = `<b>strategy</b> ${explanation.strategy}`;
  const logic = document.createElement('p');
  logic.innerHTML = `<b>logic</b> ${explanation.logic}`;
  const meta = document.createElement('p');
  meta.className = 'muted';
  meta.textContent =
    `${explanation.candidates.length} candidates scored in ` +
    `${explanation.elapsed_ms.toFixed(0)} ms; chose ` +
    `(${explanation.chosen.row}, ${explanation.chosen.col})`;
  container.append(title, strategy, logic, meta);
}

export function statusLine(state: ViewState): string {
  const snap = state.snapshot;
  if (!snap) return 'no session';
  if (state.aiThinking) return 'AI thinking…';
  const status = snap.status;
  if (status.state === 'won') {
    const who = status.winner === snap.human ? 'you win!' : 'AI wins';
    return `game over — ${who}`;
  }
  if (status.state === 'draw') return 'game over — draw';
  return snap.to_move === snap.human ? 'your turn' : "AI's turn";
}

export function describeSnapshot(snap: Snapshot): string {
  return `${snap.size}×${snap.size} · you play ${snap.human === 1 ? 'black' : 'white'} · ${snap.backend} backend`;
}
