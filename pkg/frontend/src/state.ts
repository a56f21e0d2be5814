// Pure view-state transitions. The board shown is always the newest
// server snapshot (merged by version); the client never mutates cells.

import type {
  AiMoveResponse,
  Connection,
  Snapshot,
  ViewState,
} from './types.js';

export function applySnapshot(state: ViewState, snap: Snapshot): ViewState {
  const current = state.snapshot;
  if (current && current.id === snap.id && snap.version < current.version) {
    return state; // stale event arrived after a newer snapshot
  }
  const newSession = !current || current.id !== snap.id;
  return {
    ...state,
    snapshot: snap,
    explanation: newSession ? null : state.explanation,
    error: null,
  };
}

export function applyAiMove(state: ViewState, resp: AiMoveResponse): ViewState {
  const merged = applySnapshot(state, resp.session);
  return { ...merged, explanation: resp.explanation, aiThinking: false };
}

export function setThinking(state: ViewState, on: boolean): ViewState {
  return { ...state, aiThinking: on };
}

export function setConnection(state: ViewState, connection: Connection): ViewState {
  return { ...state, connection };
}

export function setError(state: ViewState, message: string | null): ViewState {
  return { ...state, error: message };
}

export function isHumanTurn(state: ViewState): boolean {
  const snap = state.snapshot;
  return (
    !!snap &&
    snap.status.state === 'in_progress' &&
    snap.to_move === snap.human &&
    !state.aiThinking
  );
}

export function cellIndex(size: number, row: number, col: number): number {
  return row * size + col;
}
