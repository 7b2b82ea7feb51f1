import { readFileSync, writeFileSync, existsSync } from 'node:fs';
import { fileURLToPath } from 'node:url';
import { dirname, join } from 'node:path';
import { describe, expect, it } from 'vitest';

import type { Envelope, GatewayMessage, OutFrame } from '../src/protocol.js';
import {
  applyFrame,
  conversationList,
  initialState,
  mapMarkers,
  openQueries,
  ConsoleState,
  FEED_LIMIT,
} from '../src/viewmodel.js';

const here = dirname(fileURLToPath(import.meta.url));
const FRAMES: GatewayMessage[] = JSON.parse(
  readFileSync(join(here, 'fixtures', 'frames-scenario1.json'), 'utf-8'),
);
const EXPECTED_PATH = join(here, 'fixtures', 'expected-state-scenario1.json');

function stableStringify(value: unknown): string {
  return JSON.stringify(value, (_key, v) => {
    if (v && typeof v === 'object' && !Array.isArray(v)) {
      return Object.fromEntries(Object.entries(v).sort(([a], [b]) => (a < b ? -1 : 1)));
    }
    return v;
  }, 1);
}

function foldAll(): ConsoleState {
  let state = initialState();
  for (const message of FRAMES) {
    state = applyFrame(state, message.frame as OutFrame);
  }
  return state;
}

function env(overrides: Partial<Envelope>): Envelope {
  return {
    conversation_id: 'keyboard-1:9',
    msg_id: 'x#1',
    payload: { body: {}, kind: 'StateUpdate' },
    performative: 'inform',
    recipient: '*',
    sender: 'x',
    seq: 1,
    sim_time: 0,
    ...overrides,
  };
}

describe('recorded scenario-1 stream', () => {
  it('folds to a byte-stable view model', () => {
    const state = foldAll();
    const serialized = stableStringify(state);
    if (!existsSync(EXPECTED_PATH)) {
      writeFileSync(EXPECTED_PATH, serialized + '\n');
    }
    expect(serialized + '\n').toBe(readFileSync(EXPECTED_PATH, 'utf-8'));
  });

  it('is a pure fold: same frames, identical state', () => {
    expect(stableStringify(foldAll())).toBe(stableStringify(foldAll()));
  });

  it('tracks both scripted goals to done', () => {
    const state = foldAll();
    const goals = conversationList(state);
    expect(goals.length).toBe(2);
    for (const goal of goals) {
      expect(goal.requester).toBe('keyboard-1');
      expect(goal.status).toBe('done');
      expect(goal.goal.length).toBe(3);
    }
  });

  it('shows the office2 sensor dead in the liveness panel after the failure', () => {
    const state = foldAll();
    const sensor = state.agents.find((row) => row.id === 'sensor-office2');
    expect(sensor?.status).toBe('dead');
    const turtlebot = state.agents.find((row) => row.id === 'tb1');
    expect(turtlebot?.status).toBe('alive');
  });

  it('places the turtlebot somewhere on the map with live markers', () => {
    const state = foldAll();
    const markers = mapMarkers(state);
    const tb = markers.find((m) => m.id === 'tb1');
    expect(tb).toBeDefined();
    expect(state.map?.nodes).toContain(tb!.node);
  });

  it('keeps heartbeats out of the event feed', () => {
    const state = foldAll();
    expect(state.feed.some((e) => e.kind === 'CapabilityAdvertBody')).toBe(false);
    expect(state.feed.length).toBeGreaterThan(20);
  });
});

describe('status ladder', () => {
  it('walks requested -> planned -> executing -> done', () => {
    let state = initialState();
    const conv = 'operator-console:1';
    state = applyFrame(state, {
      type: 'envelope',
      envelope: env({
        conversation_id: conv, performative: 'request', sender: 'operator-console',
        recipient: 'pr-1',
        payload: { kind: 'GoalSubmission', body: { goal: [{ pos: true, atom: ['a', 'b'] }] } },
      }),
    });
    expect(state.conversations[conv].status).toBe('requested');
    state = applyFrame(state, {
      type: 'envelope',
      envelope: env({
        conversation_id: conv, performative: 'propose', sender: 'planner-1',
        recipient: 'pr-1', payload: { kind: 'PlanReply', body: { status: 'plan' } },
      }),
    });
    expect(state.conversations[conv].status).toBe('planned');
    state = applyFrame(state, {
      type: 'envelope',
      envelope: env({
        conversation_id: conv, performative: 'request', sender: 'pr-1',
        recipient: 'px-1', payload: { kind: 'PlanRequest', body: { plans: [] } },
      }),
    });
    expect(state.conversations[conv].status).toBe('executing');
    state = applyFrame(state, {
      type: 'envelope',
      envelope: env({
        conversation_id: conv, performative: 'confirm', sender: 'pr-1',
        recipient: 'operator-console',
        payload: { kind: 'ActionResult', body: { report: { status: 'success', per_step: [] } } },
      }),
    });
    expect(state.conversations[conv].status).toBe('done');
  });

  it('maps a refusal to failed with its reason', () => {
    let state = initialState();
    const conv = 'keyboard-1:3';
    state = applyFrame(state, {
      type: 'envelope',
      envelope: env({
        conversation_id: conv, performative: 'request', sender: 'keyboard-1',
        recipient: 'pr-1', payload: { kind: 'GoalSubmission', body: { goal: [] } },
      }),
    });
    state = applyFrame(state, {
      type: 'envelope',
      envelope: env({
        conversation_id: conv, performative: 'refuse', sender: 'pr-1',
        recipient: 'keyboard-1',
        payload: { kind: 'PlanRequest', body: { reason: 'no-proposals' } },
      }),
    });
    expect(state.conversations[conv].status).toBe('failed');
    expect(state.conversations[conv].reason).toBe('no-proposals');
  });
});

describe('query inbox', () => {
  it('opens on QueryBody and closes on QueryAnswer', () => {
    let state = initialState();
    const conv = 'tb1:7';
    state = applyFrame(state, {
      type: 'envelope',
      envelope: env({
        conversation_id: conv, performative: 'query', sender: 'tb1',
        recipient: 'keyboard-1',
        payload: { kind: 'QueryBody', body: { prompt: 'login at entry' } },
      }),
    });
    expect(openQueries(state).map((q) => q.conversationId)).toEqual([conv]);
    state = applyFrame(state, {
      type: 'envelope',
      envelope: env({
        conversation_id: conv, performative: 'inform', sender: 'operator-console',
        recipient: 'tb1', payload: { kind: 'QueryAnswer', body: { answer: 'ok' } },
      }),
    });
    expect(openQueries(state)).toEqual([]);
    expect(state.queries[conv].answered).toBe(true);
  });
});

describe('feed bounds and errors', () => {
  it('caps the rolling feed', () => {
    let state = initialState();
    for (let i = 0; i < FEED_LIMIT + 50; i += 1) {
      state = applyFrame(state, {
        type: 'envelope',
        envelope: env({ sim_time: i, msg_id: `x#${i + 1}`, seq: i + 1 }),
      });
    }
    expect(state.feed.length).toBe(FEED_LIMIT);
    expect(state.feed[state.feed.length - 1].tick).toBe(FEED_LIMIT + 49);
  });

  it('collects command error frames', () => {
    let state = initialState();
    state = applyFrame(state, { type: 'error', message: 'no open query ghost:1', ref: 'c9' });
    expect(state.commandErrors).toEqual([{ message: 'no open query ghost:1', ref: 'c9' }]);
  });
});
