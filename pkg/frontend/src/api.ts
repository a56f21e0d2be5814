// Typed fetch wrappers over the arena HTTP API. Every error response is
// {error, message}; surface both so the UI can map 1:1 to service codes.

import type {
  AiMoveResponse,
  GameSummary,
  MoveRef,
  ReplayData,
  Snapshot,
} from './types.js';

export class ApiError extends Error {
  constructor(
    public code: string,
    message: string,
    public status: number,
  ) {
    super(message);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  let resp: Response;
  try {
    resp = await fetch(base + path, {
      headers: { 'Content-Type': 'application/json' },
      ...init,
    });
  } catch (err) {
    throw new ApiError('network', String(err), 0);
  }
  const text = await resp.text();
  let body: unknown = null;
  try {
    body = text ? JSON.parse(text) : null;
  } catch {
    throw new ApiError('bad_json', `unparseable reply (HTTP ${resp.status})`, resp.status);
  }
  if (!resp.ok) {
    const err = body as { error?: string; message?: string } | null;
    throw new ApiError(err?.error ?? 'http_error', err?.message ?? text, resp.status);
  }
  return body as T;
}

export class ArenaClient {
  constructor(public base: string = '') {}

  createSession(opts: {
    size?: number;
    human?: 'black' | 'white';
    backend?: string;
  }): Promise<Snapshot> {
    return request(this.base, '/sessions', {
      method: 'POST',
      body: JSON.stringify(opts),
    });
  }

  getSession(id: string): Promise<Snapshot> {
    return request(this.base, `/sessions/${id}`);
  }

  submitMove(id: string, move: MoveRef): Promise<Snapshot> {
    return request(this.base, `/sessions/${id}/moves`, {
      method: 'POST',
      body: JSON.stringify(move),
    });
  }

  requestAiMove(id: string): Promise<AiMoveResponse> {
    return request(this.base, `/sessions/${id}/ai-move`, { method: 'POST' });
  }

  listGames(): Promise<{ games: GameSummary[] }> {
    return request(this.base, '/games');
  }

  getReplay(gameId: number): Promise<ReplayData> {
    return request(this.base, `/games/${gameId}/replay`);
  }

  getStats(): Promise<Record<string, unknown>> {
    return request(this.base, '/stats');
  }

  eventsUrl(id: string): string {
    return `${this.base}/sessions/${id}/events`;
  }
}
