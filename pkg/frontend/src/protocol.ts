// Wire types for the gateway protocol (docs/gateway.md). Everything the
// console knows arrives as one of these frames; it never simulates locally.

export interface Envelope {
  conversation_id: string;
  msg_id: string;
  payload: { body: Record<string, unknown>; kind: string };
  performative: string;
  recipient: string;
  seq: number;
  sender: string;
  sim_time: number;
}

export interface LivenessRow {
  id: string;
  status: 'alive' | 'dead';
  last_seen: number;
  location: string | null;
  schemas: number;
}

export interface WorldSnapshot {
  temperatures: Record<string, number>;
  agent_pos: Record<string, string>;
  health: Record<string, string>;
}

export interface MapModel {
  nodes: string[];
  edges: [string, string, number][];
}

export type OutFrame =
  | { type: 'snapshot'; tick: number; world: WorldSnapshot; liveness: LivenessRow[]; map: MapModel }
  | { type: 'envelope'; envelope: Envelope }
  | { type: 'liveness'; tick: number; agents: LivenessRow[] }
  | { type: 'world'; tick: number; snapshot: WorldSnapshot }
  | { type: 'ack'; ref: string; dedup?: boolean }
  | { type: 'error'; message: string; ref?: string };

export type Mode = 'centralized' | 'decentralized';

export type CommandFrame =
  | { cmd: 'submit_goal'; id: string; goal: string[][]; mode?: Mode }
  | { cmd: 'respond_query'; id: string; conversation_id: string; answer: string }
  | { cmd: 'inject_failure'; id: string; agent: string; state: 'down' | 'up' }
  | { cmd: 'set_mode'; id: string; mode: Mode };

export interface GatewayMessage {
  dir: 'in' | 'out';
  frame: OutFrame | CommandFrame;
}
