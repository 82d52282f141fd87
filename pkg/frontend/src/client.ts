// Thin request/response client over a browser-compatible socket. One ACT
// may be in flight at a time: holding a key down still advances the
// session by exactly one tick per server response.

import {
  ActionSpec,
  Envelope,
  decodeEnvelope,
  encodeEnvelope,
} from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

const defaultFactory: SocketFactory = (url) => {
  const ctor = (globalThis as { WebSocket?: new (url: string) => SocketLike }).WebSocket;
  if (!ctor) {
    throw new Error("no WebSocket implementation available");
  }
  return new ctor(url);
};

export class SessionClient {
  private socket: SocketLike | null = null;
  private nextId = 0;
  private pending = new Map<number, (reply: Envelope) => void>();
  private actInFlight = false;
  sessionToken: string | null = null;
  onDisconnect: (() => void) | null = null;

  constructor(
    private readonly url: string,
    private readonly factory: SocketFactory = defaultFactory,
  ) {}

  connect(): Promise<void> {
    return new Promise((resolve, reject) => {
      const socket = this.factory(this.url);
      this.socket = socket;
      socket.onopen = () => resolve();
      socket.onerror = () => reject(new Error(`cannot reach ${this.url}`));
      socket.onclose = () => {
        this.pending.clear();
        this.actInFlight = false;
        if (this.onDisconnect) this.onDisconnect();
      };
      socket.onmessage = (ev) => {
        const reply = decodeEnvelope(String(ev.data));
        const resolver = this.pending.get(reply.id);
        if (resolver) {
          this.pending.delete(reply.id);
          resolver(reply);
        }
      };
    });
  }

  request(type: string, body: Record<string, unknown>): Promise<Envelope> {
    const socket = this.socket;
    if (!socket) {
      return Promise.reject(new Error("not connected"));
    }
    const id = this.nextId++;
    return new Promise((resolve) => {
      this.pending.set(id, resolve);
      socket.send(encodeEnvelope({ type, id, body }));
    });
  }

  async hello(): Promise<Envelope> {
    return this.request("HELLO", { module_id: "browser", protocol_version: 1 });
  }

  async open(seed: number | null = null): Promise<Envelope> {
    const body = this.sessionToken
      ? { token: this.sessionToken }
      : { token: null, seed };
    const reply = await this.request("OPEN", body);
    if (reply.type === "STATE") {
      this.sessionToken = String(reply.body.session);
    }
    return reply;
  }

  /** Send one action; returns null while a previous ACT is unanswered. */
  async act(action: ActionSpec): Promise<Envelope | null> {
    if (this.actInFlight) {
      return null;
    }
    this.actInFlight = true;
    try {
      return await this.request("ACT", { action });
    } finally {
      this.actInFlight = false;
    }
  }

  async queryRules(): Promise<Envelope> {
    return this.request("QUERY", { context: null, goal_outcomes: null });
  }

  async bye(): Promise<Envelope> {
    return this.request("BYE", {});
  }

  close(): void {
    if (this.socket) {
      this.socket.close();
      this.socket = null;
    }
  }
}
