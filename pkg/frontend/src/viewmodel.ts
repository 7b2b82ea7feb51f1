// The console's entire state derives from folding gateway frames into this
// model; rendering the same frame sequence always yields the same state, so
// the fold is snapshot-testable and there is no client-side simulation.

import type {
  Envelope,
  LivenessRow,
  MapModel,
  OutFrame,
  WorldSnapshot,
} from './protocol.js';

export type GoalStatus = 'requested' | 'planned' | 'executing' | 'done' | 'failed';

export interface ConversationModel {
  conversationId: string;
  requester: string;
  goal: string[][];
  status: GoalStatus;
  reason?: string;
  lastTick: number;
}

export interface QueryModel {
  conversationId: string;
  asker: string;
  prompt: string;
  tick: number;
  answered: boolean;
}

export interface FeedEntry {
  order: number;
  tick: number;
  performative: string;
  kind: string;
  sender: string;
  recipient: string;
  conversationId: string;
}

export interface ConsoleState {
  connection: 'connecting' | 'connected' | 'disconnected';
  tick: number;
  map: MapModel | null;
  world: WorldSnapshot | null;
  agents: LivenessRow[];
  conversations: Record<string, ConversationModel>;
  queries: Record<string, QueryModel>;
  feed: FeedEntry[];
  feedSeq: number;
  commandErrors: { message: string; ref?: string }[];
  pendingWarning: number; // commands queued while disconnected
}

export const FEED_LIMIT = 500;

export function initialState(): ConsoleState {
  return {
    connection: 'connecting',
    tick: 0,
    map: null,
    world: null,
    agents: [],
    conversations: {},
    queries: {},
    feed: [],
    feedSeq: 0,
    commandErrors: [],
    pendingWarning: 0,
  };
}

function literalAtoms(goal: unknown): string[][] {
  if (!Array.isArray(goal)) return [];
  return goal
    .map((l) => (l && typeof l === 'object' && Array.isArray((l as any).atom)
      ? ((l as any).atom as string[])
      : null))
    .filter((a): a is string[] => a !== null);
}

function foldEnvelope(state: ConsoleState, e: Envelope): ConsoleState {
  const next = { ...state, tick: Math.max(state.tick, e.sim_time) };

  if (e.payload.kind !== 'CapabilityAdvertBody') {
    const entry: FeedEntry = {
      order: state.feedSeq,
      tick: e.sim_time,
      performative: e.performative,
      kind: e.payload.kind,
      sender: e.sender,
      recipient: e.recipient,
      conversationId: e.conversation_id,
    };
    next.feedSeq = state.feedSeq + 1;
    next.feed = [...state.feed, entry].slice(-FEED_LIMIT);
  }

  const conv = e.conversation_id;
  const body = e.payload.body as any;

  if (e.performative === 'request' && e.payload.kind === 'GoalSubmission') {
    next.conversations = {
      ...next.conversations,
      [conv]: {
        conversationId: conv,
        requester: e.sender,
        goal: literalAtoms(body.goal),
        status: 'requested',
        lastTick: e.sim_time,
      },
    };
    return next;
  }

  const existing = next.conversations[conv];
  if (existing) {
    let status: GoalStatus | null = null;
    let reason: string | undefined;
    if (e.performative === 'propose' && e.payload.kind === 'PlanReply') {
      status = 'planned';
    } else if (e.performative === 'accept') {
      status = 'planned';
    } else if (e.performative === 'request' && e.payload.kind === 'PlanRequest'
               && Array.isArray(body.plans)) {
      status = 'executing';
    } else if (e.performative === 'confirm' && e.payload.kind === 'ActionResult'
               && body.report && e.recipient === existing.requester) {
      status = body.report.status === 'success' ? 'done' : 'failed';
      reason = body.report.failure_reason ?? undefined;
    } else if (e.performative === 'refuse' && e.recipient === existing.requester) {
      status = 'failed';
      reason = body.reason;
    }
    if (status !== null) {
      next.conversations = {
        ...next.conversations,
        [conv]: { ...existing, status, reason, lastTick: e.sim_time },
      };
    }
  }

  if (e.performative === 'query' && e.payload.kind === 'QueryBody') {
    next.queries = {
      ...next.queries,
      [conv]: {
        conversationId: conv,
        asker: e.sender,
        prompt: String(body.prompt ?? ''),
        tick: e.sim_time,
        answered: false,
      },
    };
  } else if (e.performative === 'inform' && e.payload.kind === 'QueryAnswer') {
    const query = next.queries[conv];
    if (query) {
      next.queries = { ...next.queries, [conv]: { ...query, answered: true } };
    }
  }
  return next;
}

export function applyFrame(state: ConsoleState, frame: OutFrame): ConsoleState {
  switch (frame.type) {
    case 'snapshot':
      return {
        ...state,
        connection: 'connected',
        tick: frame.tick,
        map: frame.map,
        world: frame.world,
        agents: frame.liveness,
      };
    case 'liveness':
      return { ...state, tick: frame.tick, agents: frame.agents };
    case 'world':
      return { ...state, tick: frame.tick, world: frame.snapshot };
    case 'envelope':
      return foldEnvelope(state, frame.envelope);
    case 'error':
      return {
        ...state,
        commandErrors: [...state.commandErrors, { message: frame.message, ref: frame.ref }].slice(-20),
      };
    case 'ack':
      return state;
    default:
      return state;
  }
}

// -- panel selectors ----------------------------------------------------------

export interface MapAgentMarker {
  id: string;
  node: string;
  status: 'alive' | 'dead' | 'unknown';
}

export function mapMarkers(state: ConsoleState): MapAgentMarker[] {
  if (!state.world) return [];
  const liveness = new Map(state.agents.map((row) => [row.id, row.status]));
  return Object.entries(state.world.agent_pos)
    .map(([id, node]) => ({ id, node, status: liveness.get(id) ?? ('unknown' as const) }))
    .sort((a, b) => a.id.localeCompare(b.id));
}

export function openQueries(state: ConsoleState): QueryModel[] {
  return Object.values(state.queries)
    .filter((q) => !q.answered)
    .sort((a, b) => a.tick - b.tick);
}

export function conversationList(state: ConsoleState): ConversationModel[] {
  return Object.values(state.conversations)
    .sort((a, b) => a.conversationId.localeCompare(b.conversationId));
}
