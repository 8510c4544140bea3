/**
 * Snapshot feed: WebSocket push with HTTP polling fallback.
 *
 * The feed prefers /ws/snapshots; while the socket is down it reconnects
 * with exponential backoff (1 s doubling to 15 s) and polls
 * GET /api/snapshot at 2 Hz so the dashboard keeps moving. Socket,
 * fetch, and timers are injectable for tests.
 */

import { parseSnapshot, Snapshot } from "./types.js";

export type FeedStatus = "connecting" | "live" | "polling";

export interface SocketLike {
  onopen: (() => void) | null;
  onmessage: ((event: { data: string }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
  close(): void;
}

export interface FeedOptions {
  wsUrl: string;
  snapshotUrl: string;
  makeSocket?: (url: string) => SocketLike;
  fetchJson?: (url: string) => Promise<unknown>;
  schedule?: (fn: () => void, ms: number) => unknown;
  cancel?: (handle: unknown) => void;
  pollPeriodMs?: number;
  backoffInitialMs?: number;
  backoffMaxMs?: number;
}

async function defaultFetchJson(url: string): Promise<unknown> {
  const res = await fetch(url);
  if (!res.ok) {
    throw new Error(`${url} -> HTTP ${res.status}`);
  }
  return res.json();
}

export class SnapshotFeed {
  status: FeedStatus = "connecting";
  reconnectAttempts = 0;

  private socket: SocketLike | null = null;
  private pollTimer: unknown = null;
  private reconnectTimer: unknown = null;
  private stopped = false;
  private backoffMs: number;

  private snapshotListeners: Array<(snap: Snapshot) => void> = [];
  private statusListeners: Array<(status: FeedStatus) => void> = [];

  private readonly makeSocket: (url: string) => SocketLike;
  private readonly fetchJson: (url: string) => Promise<unknown>;
  private readonly schedule: (fn: () => void, ms: number) => unknown;
  private readonly cancel: (handle: unknown) => void;
  private readonly pollPeriodMs: number;
  private readonly backoffInitialMs: number;
  private readonly backoffMaxMs: number;

  constructor(private readonly opts: FeedOptions) {
    this.makeSocket = opts.makeSocket ?? ((url) => new WebSocket(url) as unknown as SocketLike);
    this.fetchJson = opts.fetchJson ?? defaultFetchJson;
    this.schedule = opts.schedule ?? ((fn, ms) => setTimeout(fn, ms));
    this.cancel = opts.cancel ?? ((handle) => clearTimeout(handle as number));
    this.pollPeriodMs = opts.pollPeriodMs ?? 500;
    this.backoffInitialMs = opts.backoffInitialMs ?? 1000;
    this.backoffMaxMs = opts.backoffMaxMs ?? 15000;
    this.backoffMs = this.backoffInitialMs;
  }

  onSnapshot(listener: (snap: Snapshot) => void): void {
    this.snapshotListeners.push(listener);
  }

  onStatus(listener: (status: FeedStatus) => void): void {
    this.statusListeners.push(listener);
  }

  start(): void {
    this.stopped = false;
    this.connect();
  }

  stop(): void {
    this.stopped = true;
    if (this.socket) {
      this.socket.close();
      this.socket = null;
    }
    if (this.pollTimer !== null) {
      this.cancel(this.pollTimer);
      this.pollTimer = null;
    }
    if (this.reconnectTimer !== null) {
      this.cancel(this.reconnectTimer);
      this.reconnectTimer = null;
    }
  }

  private setStatus(status: FeedStatus): void {
    if (this.status !== status) {
      this.status = status;
      for (const listener of this.statusListeners) {
        listener(status);
      }
    }
  }

  private emit(snapshot: Snapshot): void {
    for (const listener of this.snapshotListeners) {
      listener(snapshot);
    }
  }

  private connect(): void {
    if (this.stopped) {
      return;
    }
    let socket: SocketLike;
    try {
      socket = this.makeSocket(this.opts.wsUrl);
    } catch {
      this.onSocketDown();
      return;
    }
    this.socket = socket;
    const down = () => {
      if (this.socket !== socket) {
        return; // this socket's failure was already handled
      }
      this.socket = null;
      this.onSocketDown();
    };
    socket.onopen = () => {
      this.backoffMs = this.backoffInitialMs;
      this.stopPolling();
      this.setStatus("live");
    };
    socket.onmessage = (event) => {
      try {
        this.emit(parseSnapshot(JSON.parse(event.data)));
      } catch {
        // a malformed push is dropped; the next one resynchronizes
      }
    };
    socket.onclose = down;
    socket.onerror = () => {
      try {
        socket.close();
      } catch {
        // already closed
      }
      down();
    };
  }

  private onSocketDown(): void {
    if (this.stopped) {
      return;
    }
    this.setStatus("polling");
    this.startPolling();
    this.reconnectAttempts += 1;
    const delay = this.backoffMs;
    this.backoffMs = Math.min(this.backoffMs * 2, this.backoffMaxMs);
    this.reconnectTimer = this.schedule(() => {
      this.reconnectTimer = null;
      this.connect();
    }, delay);
  }

  private startPolling(): void {
    if (this.pollTimer !== null || this.stopped) {
      return;
    }
    const tick = () => {
      this.pollTimer = this.schedule(tick, this.pollPeriodMs);
      this.fetchJson(this.opts.snapshotUrl)
        .then((doc) => {
          if (this.status === "polling") {
            this.emit(parseSnapshot(doc));
          }
        })
        .catch(() => {
          // server unreachable: keep polling, the banner already shows
        });
    };
    tick();
  }

  private stopPolling(): void {
    if (this.pollTimer !== null) {
      this.cancel(this.pollTimer);
      this.pollTimer = null;
    }
  }
}
