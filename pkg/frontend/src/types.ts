// Wire types mirroring the arena service JSON, plus client view state.

export interface MoveRef {
  row: number;
  col: number;
}

export interface HistoryEntry extends MoveRef {
  player: number;
}

export interface Status {
  state: 'in_progress' | 'won' | 'draw';
  winner: number | null;
  line: number[][];
}

export interface Snapshot {
  id: string;
  size: number;
  cells: number[];
  history: HistoryEntry[];
  to_move: number;
  human: number;
  backend: string;
  status: Status;
  version: number;
  created_at: number;
}

export interface Candidate extends MoveRef {
  score: number;
}

export interface Explanation {
  strategy: string;
  logic: string;
  candidates: Candidate[];
  chosen: MoveRef;
  elapsed_ms: number;
}

export interface AiMoveResponse {
  position: MoveRef;
  explanation: Explanation;
  session: Snapshot;
}

export interface ReplayTurn extends MoveRef {
  turn: number;
  player: number;
  strategy: string;
  logic: string;
  reward: number;
  done: boolean;
}

export interface ReplayData {
  game_id: number;
  board_size: number;
  outcome: string;
  winner: number | null;
  turns: ReplayTurn[];
}

export interface GameSummary {
  game_id: number;
  moves: number;
  outcome: string;
  winner: number | null;
}

export type Connection = 'connecting' | 'live' | 'lost';

export interface ViewState {
  snapshot: Snapshot | null;
  explanation: Explanation | null;
  aiThinking: boolean;
  connection: Connection;
  error: string | null;
}

export const BLACK = 1;
export const WHITE = -1;

export function emptyViewState(): ViewState {
  return {
    snapshot: null,
    explanation: null,
    aiThinking: false,
    connection: 'connecting',
    error: null,
  };
}
