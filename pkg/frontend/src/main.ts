// App wiring: create-session form, live play view, replay browser.

import { ApiError, ArenaClient } from './api.js';
import { renderBoard } from './board.js';
import { describeSnapshot, renderExplanation, statusLine } from './panel.js';
import { buildFrames, clampFrame, Frame } from './replay.js';
import { parseSseChunk, subscribeEvents, Subscription } from './sse.js';
import {
  applyAiMove,
  applySnapshot,
  isHumanTurn,
  setConnection,
  setError,
  setThinking,
} from './state.js';
import type { AiMoveResponse, Snapshot, ViewState } from './types.js';
import { emptyViewState } from './types.js';

const client = new ArenaClient('');
let state: ViewState = emptyViewState();
let subscription: Subscription | null = null;

const $ = <T extends HTMLElement>(id: string): T =>
  document.getElementById(id) as T;

function update(next: ViewState): void {
  state = next;
  render();
}

function render(): void {
  const board = $('board');
  const snap = state.snapshot;
  $('status-line').textContent = statusLine(state);
  $('session-desc').textContent = snap ? describeSnapshot(snap) : '';
  const banner = $('error-banner');
  banner.hidden = !state.error;
  banner.textContent = state.error ?? '';
  $('connection').dataset.state = state.connection;
  $('connection').textContent = state.connection;
  if (snap) {
    renderBoard(board, snap, state.explanation, isHumanTurn(state), {
      onCellClick: (row, col) => void handleCellClick(row, col),
    });
  }
  renderExplanation($('explanation'), state.explanation);
}

async function handleCellClick(row: number, col: number): Promise<void> {
  const snap = state.snapshot;
  if (!snap || !isHumanTurn(state)) return;
  try {
    const updated = await client.submitMove(snap.id, { row, col });
    update(applySnapshot(state, updated));
  } catch (err) {
    if (err instanceof ApiError) {
      update(setError(state, `${err.code}: ${err.message}`));
      return; // occupied / finished clicks: board stays as the server says
    }
    throw err;
  }
  await maybeRequestAiMove();
}

async function maybeRequestAiMove(): Promise<void> {
  const snap = state.snapshot;
  if (!snap || snap.status.state !== 'in_progress') return;
  if (snap.to_move === snap.human) return;
  update(setThinking(state, true));
  try {
    const resp: AiMoveResponse = await client.requestAiMove(snap.id);
    update(applyAiMove(state, resp));
  } catch (err) {
    update(setThinking(setError(state, err instanceof ApiError ? err.message : String(err)), false));
  }
}

function subscribe(sessionId: string): void {
  subscription?.close();
  subscription = subscribeEvents(
    client.eventsUrl(sessionId),
    (ev) => {
      if (ev.event === 'snapshot' || ev.event === 'move-applied') {
        update(applySnapshot(state, JSON.parse(ev.data) as Snapshot));
      } else if (ev.event === 'ai-thinking') {
        update(setThinking(state, true));
      } else if (ev.event === 'ai-moved') {
        update(applyAiMove(state, JSON.parse(ev.data) as AiMoveResponse));
      }
    },
    (live) => update(setConnection(state, live ? 'live' : 'lost')),
  );
}

async function startSession(): Promise<void> {
  const size = Number(($('size-input') as HTMLInputElement).value) || 15;
  const human = ($('color-select') as HTMLSelectElement).value as 'black' | 'white';
  try {
    const snap = await client.createSession({ size, human });
    update(applySnapshot(emptyViewState(), snap));
    subscribe(snap.id);
    if (human === 'white') await maybeRequestAiMove();
  } catch (err) {
    update(setError(state, err instanceof ApiError ? err.message : String(err)));
  }
}

// ----- replay browser -----

let frames: Frame[] = [];
let frameIndex = 0;

async function loadGames(): Promise<void> {
  const list = $('game-list');
  list.innerHTML = '';
  try {
    const { games } = await client.listGames();
    if (games.length === 0) {
      list.textContent = 'no stored games';
      return;
    }
    for (const game of games) {
      const button = document.createElement('button');
      button.textContent = `game ${game.game_id} · ${game.moves} moves · ${game.outcome}`;
      button.addEventListener('click', () => void loadReplay(game.game_id));
      list.appendChild(button);
    }
  } catch (err) {
    list.textContent = err instanceof ApiError ? err.message : String(err);
  }
}

async function loadReplay(gameId: number): Promise<void> {
  const replay = await client.getReplay(gameId);
  frames = buildFrames(replay);
  frameIndex = frames.length - 1;
  const slider = $('frame-slider') as HTMLInputElement;
  slider.max = String(frames.length - 1);
  renderFrame(replay.board_size);
}

function renderFrame(size: number): void {
  frameIndex = clampFrame(frames, frameIndex);
  const frame = frames[frameIndex];
  const board = $('replay-board');
  board.innerHTML = '';
  board.style.setProperty('--board-size', String(size));
  frame.cells.forEach((value, i) => {
    const cell = document.createElement('div');
    cell.className = 'cell';
    if (value !== 0) {
      const stone = document.createElement('div');
      stone.className = value === 1 ? 'stone black' : 'stone white';
      const turn = frame.lastTurn;
      if (turn && turn.row * size + turn.col === i) stone.classList.add('last');
      cell.appendChild(stone);
    }
    board.appendChild(cell);
  });
  ($('frame-slider') as HTMLInputElement).value = String(frameIndex);
  const turn = frame.lastTurn;
  $('frame-info').textContent = turn
    ? `move ${frame.index}/${frames.length - 1}: ` +
      `${turn.player === 1 ? 'black' : 'white'} (${turn.row}, ${turn.col})` +
      (turn.strategy ? ` · ${turn.strategy} / ${turn.logic}` : '') +
      ` · reward ${turn.reward.toFixed(3)}`
    : 'empty board';
}

function bindReplayControls(): void {
  const size = () => Math.sqrt(frames[0]?.cells.length ?? 225);
  $('frame-prev').addEventListener('click', () => {
    frameIndex -= 1;
    renderFrame(size());
  });
  $('frame-next').addEventListener('click', () => {
    frameIndex += 1;
    renderFrame(size());
  });
  ($('frame-slider') as HTMLInputElement).addEventListener('input', (ev) => {
    frameIndex = Number((ev.target as HTMLInputElement).value);
    renderFrame(size());
  });
}

function bindTabs(): void {
  const tabs: Record<string, string> = { 'tab-play': 'play-view', 'tab-replay': 'replay-view' };
  for (const [tabId, viewId] of Object.entries(tabs)) {
    $(tabId).addEventListener('click', () => {
      for (const otherView of Object.values(tabs)) $(otherView).hidden = otherView !== viewId;
      for (const otherTab of Object.keys(tabs)) $(otherTab).classList.toggle('active', otherTab === tabId);
      if (viewId === 'replay-view') void loadGames();
    });
  }
}

export function boot(): void {
  $('new-game').addEventListener('click', () => void startSession());
  bindTabs();
  bindReplayControls();
  render();
}

if (typeof document !== 'undefined' && document.getElementById('board')) {
  boot();
}

export { parseSseChunk };
