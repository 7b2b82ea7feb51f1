// Gateway connection: folds the outbound frame stream into the view model and
// sends command frames. Works with the browser WebSocket or any compatible
// implementation injected through the socket factory (node tests pass `ws`).
//
// Reconnect strategy: the gateway resends a full snapshot on connect, so the
// client simply reconnects and rebuilds; commands issued while disconnected
// are queued locally (surfaced as pendingWarning) and flushed on reconnect.

import { CommandFactory } from './commands.js';
import type { CommandFrame, GatewayMessage, Mode, OutFrame } from './protocol.js';
import { applyFrame, ConsoleState, initialState } from './viewmodel.js';

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ConsoleClientOptions {
  socketFactory: SocketFactory;
  commands?: CommandFactory;
  onChange?: (state: ConsoleState) => void;
  reconnectDelayMs?: number;
}

export class ConsoleClient {
  state: ConsoleState = initialState();
  private socket: SocketLike | null = null;
  private queued: CommandFrame[] = [];
  private closed = false;
  private readonly commands: CommandFactory;

  constructor(private url: string, private opts: ConsoleClientOptions) {
    this.commands = opts.commands ?? new CommandFactory();
  }

  connect(): void {
    this.closed = false;
    this.open();
  }

  private open(): void {
    const socket = this.opts.socketFactory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.update({ ...this.state, connection: 'connected' });
      const backlog = this.queued;
      this.queued = [];
      for (const frame of backlog) {
        this.sendFrame(frame);
      }
      if (backlog.length) {
        this.update({ ...this.state, pendingWarning: 0 });
      }
    };
    socket.onmessage = (ev) => {
      let message: GatewayMessage;
      try {
        message = JSON.parse(String(ev.data));
      } catch {
        return;
      }
      if (message.dir !== 'out') return;
      this.update(applyFrame(this.state, message.frame as OutFrame));
    };
    socket.onclose = () => {
      this.socket = null;
      if (this.closed) return;
      this.update({ ...this.state, connection: 'disconnected' });
      const delay = this.opts.reconnectDelayMs ?? 1000;
      setTimeout(() => {
        if (!this.closed) this.open();
      }, delay);
    };
    socket.onerror = () => {
      /* onclose follows */
    };
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
    this.socket = null;
  }

  private update(state: ConsoleState): void {
    this.state = state;
    this.opts.onChange?.(state);
  }

  private sendFrame(frame: CommandFrame): void {
    if (this.state.connection === 'connected' && this.socket) {
      this.socket.send(JSON.stringify({ dir: 'in', frame }));
    } else {
      this.queued.push(frame);
      this.update({ ...this.state, pendingWarning: this.queued.length });
    }
  }

  submitGoal(goal: string[][], mode?: Mode): CommandFrame {
    const frame = this.commands.submitGoal(goal, mode);
    this.sendFrame(frame);
    return frame;
  }

  respondQuery(conversationId: string, answer: string): CommandFrame {
    const frame = this.commands.respondQuery(conversationId, answer);
    this.sendFrame(frame);
    return frame;
  }

  injectFailure(agent: string, state: 'down' | 'up'): CommandFrame {
    const frame = this.commands.injectFailure(agent, state);
    this.sendFrame(frame);
    return frame;
  }

  setMode(mode: Mode): CommandFrame {
    const frame = this.commands.setMode(mode);
    this.sendFrame(frame);
    return frame;
  }
}
