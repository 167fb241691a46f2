/**
 * HTTP client for the simulator service plus the live tick stream.
 *
 * All responses are zod-validated; non-2xx responses become ApiError with
 * the service's error code preserved so components can branch on it.
 */

import { z } from 'zod';
import {
  AdvanceOutSchema,
  ApiErrorPayloadSchema,
  BranchOutSchema,
  BranchTreeOutSchema,
  InjectOutSchema,
  ReplayOutSchema,
  SessionOutSchema,
  TickRecordSchema,
  TimelineOutSchema,
} from './types.js';
import type {
  AdvanceOut,
  BranchOut,
  BranchTreeOut,
  EventDraft,
  InjectOut,
  ReplayOut,
  SessionState,
  TickRecord,
} from './types.js';

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;
  readonly problems: string[][];

  constructor(code: string, message: string, status: number, problems: string[][] = []) {
    super(message);
    this.name = 'ApiError';
    this.code = code;
    this.status = status;
    this.problems = problems;
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async call<T>(
    schema: z.ZodType<T>,
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const init: RequestInit = { method, headers: { 'Content-Type': 'application/json' } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.baseUrl + path, init);
    const payload: unknown = await response.json().catch(() => null);
    if (!response.ok) {
      const parsed = ApiErrorPayloadSchema.safeParse(payload);
      if (parsed.success) {
        throw new ApiError(
          parsed.data.code,
          parsed.data.message,
          response.status,
          parsed.data.problems ?? [],
        );
      }
      throw new ApiError(`Http${response.status}`, response.statusText, response.status);
    }
    return schema.parse(payload);
  }

  branch(branchId: string): Promise<BranchOut> {
    return this.call(BranchOutSchema, 'GET', `/branches/${branchId}`);
  }

  branchTree(simId: string): Promise<BranchTreeOut> {
    return this.call(BranchTreeOutSchema, 'GET', `/simulations/${simId}/branches`);
  }

  timeline(branchId: string, fromTick = 0, toTick?: number): Promise<TickRecord[]> {
    let path = `/branches/${branchId}/timeline?from=${fromTick}`;
    if (toTick !== undefined) {
      path += `&to=${toTick}`;
    }
    return this.call(TimelineOutSchema, 'GET', path).then((out) => out.records);
  }

  advance(branchId: string, nTicks: number): Promise<AdvanceOut> {
    return this.call(AdvanceOutSchema, 'POST', `/branches/${branchId}/advance`, {
      n_ticks: nTicks,
    });
  }

  inject(
    branchId: string,
    event: EventDraft,
    autoFork: boolean,
    label?: string,
  ): Promise<InjectOut> {
    return this.call(InjectOutSchema, 'POST', `/branches/${branchId}/inject`, {
      event,
      auto_fork: autoFork,
      label: label ?? null,
    });
  }

  fork(branchId: string, tick: number, label = ''): Promise<BranchOut> {
    return this.call(BranchOutSchema, 'POST', `/branches/${branchId}/fork`, { tick, label });
  }

  replay(branchId: string): Promise<ReplayOut> {
    return this.call(ReplayOutSchema, 'POST', `/branches/${branchId}/replay`);
  }

  openSession(left: string, right: string): Promise<SessionState> {
    return this.call(SessionOutSchema, 'POST', '/sessions', { left, right }).then(
      (out) => out.session,
    );
  }

  session(sessionId: string): Promise<SessionState> {
    return this.call(SessionOutSchema, 'GET', `/sessions/${sessionId}`).then(
      (out) => out.session,
    );
  }

  control(
    sessionId: string,
    side: 'LEFT' | 'RIGHT',
    action: 'RUN' | 'PAUSE',
    nTicks = 1,
  ): Promise<SessionState> {
    return this.call(SessionOutSchema, 'POST', `/sessions/${sessionId}/control`, {
      side,
      action,
      n_ticks: nTicks,
    }).then((out) => out.session);
  }
}

// ---------- live stream ----------

export type StreamStatus = 'live' | 'stale';

export interface StreamHandlers {
  onRecord: (record: TickRecord) => void;
  onStatus?: (status: StreamStatus) => void;
}

export interface StreamSubscription {
  close: () => void;
}

/** Minimal EventSource surface so tests can substitute a scripted source. */
export interface EventSourceLike {
  addEventListener(type: string, listener: (event: MessageEvent) => void): void;
  close(): void;
}

export type EventSourceFactory = (url: string) => EventSourceLike;

const defaultFactory: EventSourceFactory = (url) =>
  new EventSource(url) as unknown as EventSourceLike;

/**
 * Subscribe to a branch's tick stream.
 *
 * The server frames each TickRecord as an SSE "tick" event whose id is the
 * tick number. On connection loss the subscription reports "stale" and
 * reconnects from the tick after the last record it saw, so a pane never
 * skips or re-applies ticks across a disconnect.
 */
export function subscribeTicks(
  baseUrl: string,
  branchId: string,
  fromTick: number,
  handlers: StreamHandlers,
  factory: EventSourceFactory = defaultFactory,
  retryMs = 2000,
): StreamSubscription {
  let nextTick = fromTick;
  let source: EventSourceLike | null = null;
  let retryTimer: ReturnType<typeof setTimeout> | null = null;
  let closed = false;

  const connect = () => {
    if (closed) {
      return;
    }
    source = factory(`${baseUrl}/branches/${branchId}/stream?from=${nextTick}`);
    source.addEventListener('tick', (event) => {
      const record = TickRecordSchema.parse(JSON.parse(event.data as string));
      nextTick = record.tick + 1;
      handlers.onRecord(record);
    });
    source.addEventListener('error', () => {
      if (closed) {
        return;
      }
      handlers.onStatus?.('stale');
      source?.close();
      retryTimer = setTimeout(() => {
        connect();
        handlers.onStatus?.('live');
      }, retryMs);
    });
    source.addEventListener('open', () => handlers.onStatus?.('live'));
  };

  connect();
  return {
    close: () => {
      closed = true;
      if (retryTimer !== null) {
        clearTimeout(retryTimer);
      }
      source?.close();
    },
  };
}
