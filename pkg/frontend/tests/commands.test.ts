import { describe, expect, it } from 'vitest';

import { ConsoleClient, SocketLike } from '../src/client.js';
import { CommandFactory, ValidationError, parseGoalText } from '../src/commands.js';

function seqIds(prefix = 'id'): () => string {
  let n = 0;
  return () => `${prefix}-${++n}`;
}

class StubSocket implements SocketLike {
  sent: string[] = [];
  onopen: ((ev?: unknown) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  onerror: ((ev?: unknown) => void) | null = null;
  send(data: string) { this.sent.push(data); }
  close() { this.onclose?.(); }
}

function makeClient() {
  const sockets: StubSocket[] = [];
  const client = new ConsoleClient('ws://test', {
    socketFactory: () => {
      const s = new StubSocket();
      sockets.push(s);
      return s;
    },
    commands: new CommandFactory(seqIds()),
    reconnectDelayMs: 1,
  });
  return { client, sockets };
}

describe('command construction', () => {
  it('every action yields exactly one frame with a fresh idempotency id', () => {
    const commands = new CommandFactory(seqIds('cmd'));
    const a = commands.submitGoal([['temperature-reported', 'office1']]);
    const b = commands.respondQuery('tb1:4', 'ok');
    const c = commands.injectFailure('sensor-office2', 'down');
    const d = commands.setMode('decentralized');
    const ids = [a.id, b.id, c.id, d.id];
    expect(new Set(ids).size).toBe(4);
    expect(ids).toEqual(['cmd-1', 'cmd-2', 'cmd-3', 'cmd-4']);
  });

  it('rejects malformed goal atoms before anything is sent', () => {
    const commands = new CommandFactory(seqIds());
    expect(() => commands.submitGoal([])).toThrow(ValidationError);
    expect(() => commands.submitGoal([['']])).toThrow(ValidationError);
    expect(() => commands.submitGoal([['bad atom!', 'x']])).toThrow(ValidationError);
  });

  it('parses goal text one atom per line', () => {
    expect(parseGoalText('temperature-reported office1\n temperature-reported office2 '))
      .toEqual([
        ['temperature-reported', 'office1'],
        ['temperature-reported', 'office2'],
      ]);
    expect(() => parseGoalText('')).toThrow(ValidationError);
    expect(() => parseGoalText('ok\n???')).toThrow(ValidationError);
  });
});

describe('client send paths', () => {
  it('sends a single in-frame per action once connected', () => {
    const { client, sockets } = makeClient();
    client.connect();
    sockets[0].onopen?.();
    client.submitGoal([['temperature-reported', 'office1']]);
    expect(sockets[0].sent.length).toBe(1);
    const message = JSON.parse(sockets[0].sent[0]);
    expect(message.dir).toBe('in');
    expect(message.frame.cmd).toBe('submit_goal');
    expect(message.frame.id).toBe('id-1');
  });

  it('validation failures send nothing', () => {
    const { client, sockets } = makeClient();
    client.connect();
    sockets[0].onopen?.();
    expect(() => client.submitGoal([['***']])).toThrow(ValidationError);
    expect(sockets[0].sent).toEqual([]);
  });

  it('queues while disconnected, warns, and flushes on reconnect', async () => {
    const { client, sockets } = makeClient();
    client.connect();
    sockets[0].onopen?.();
    sockets[0].close(); // drops the link; client schedules a reconnect
    client.submitGoal([['temperature-reported', 'office1']]);
    expect(client.state.pendingWarning).toBe(1);
    await new Promise((resolve) => setTimeout(resolve, 10));
    expect(sockets.length).toBe(2);
    sockets[1].onopen?.();
    expect(sockets[1].sent.length).toBe(1);
    expect(client.state.pendingWarning).toBe(0);
    expect(JSON.parse(sockets[1].sent[0]).frame.cmd).toBe('submit_goal');
  });

  it('folds incoming out-frames into the view model', () => {
    const { client, sockets } = makeClient();
    client.connect();
    sockets[0].onopen?.();
    sockets[0].onmessage?.({
      data: JSON.stringify({
        dir: 'out',
        frame: { type: 'liveness', tick: 5, agents: [
          { id: 'tb1', status: 'alive', last_seen: 0, location: 'corridor', schemas: 3 },
        ] },
      }),
    });
    expect(client.state.agents.length).toBe(1);
    expect(client.state.tick).toBe(5);
  });
});
