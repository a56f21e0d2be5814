// Server-sent-events subscription over fetch streaming (works in both
// browsers and node), with a pure incremental parser and reconnect.

export interface SseEvent {
  event: string;
  data: string;
}

export interface ParseResult {
  events: SseEvent[];
  rest: string;
}

// Parse complete events out of `buffer`; the unread tail is returned so
// the caller can append the next chunk to it.
export function parseSseChunk(buffer: string): ParseResult {
  const events: SseEvent[] = [];
  const blocks = buffer.split('\n\n');
  const rest = blocks.pop() ?? '';
  for (const block of blocks) {
    let event = 'message';
    const data: string[] = [];
    for (const line of block.split('\n')) {
      if (line.startsWith('event: ')) event = line.slice(7);
      else if (line.startsWith('data: ')) data.push(line.slice(6));
      // comment lines (": keepalive") are ignored
    }
    if (data.length > 0) events.push({ event, data: data.join('\n') });
  }
  return { events, rest };
}

export interface Subscription {
  close(): void;
}

export function subscribeEvents(
  url: string,
  onEvent: (ev: SseEvent) => void,
  onStatus: (live: boolean) => void,
  reconnectDelayMs = 2000,
): Subscription {
  let closed = false;
  let controller: AbortController | null = null;

  async function run(): Promise<void> {
    while (!closed) {
      controller = new AbortController();
      try {
        const resp = await fetch(url, {
          headers: { Accept: 'text/event-stream' },
          signal: controller.signal,
        });
        if (!resp.ok || !resp.body) throw new Error(`HTTP ${resp.status}`);
        onStatus(true);
        const reader = resp.body.getReader();
        const decoder = new TextDecoder();
        let buffer = '';
        for (;;) {
          const { done, value } = await reader.read();
          if (done) break;
          buffer += decoder.decode(value, { stream: true });
          const { events, rest } = parseSseChunk(buffer);
          buffer = rest;
          events.forEach(onEvent);
        }
      } catch {
        // fall through to reconnect
      }
      if (closed) return;
      onStatus(false);
      await new Promise((resolve) => setTimeout(resolve, reconnectDelayMs));
    }
  }

  void run();
  return {
    close() {
      closed = true;
      controller?.abort();
    },
  };
}
