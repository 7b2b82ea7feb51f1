// Command construction and validation. Every user action yields exactly one
// frame with a client-generated idempotency id; malformed input is rejected
// here so nothing ever hits the wire.

import type { CommandFrame, Mode } from './protocol.js';

const ATOM_PART = /^[A-Za-z][A-Za-z0-9_-]*$/;

export class ValidationError extends Error {}

export function defaultIdGenerator(prefix = 'console'): () => string {
  let n = 0;
  return () => `${prefix}-${++n}-${Date.now().toString(36)}`;
}

export function validateGoalAtoms(goal: unknown): string[][] {
  if (!Array.isArray(goal) || goal.length === 0) {
    throw new ValidationError('goal must be a non-empty list of atoms');
  }
  return goal.map((atom) => {
    if (!Array.isArray(atom) || atom.length === 0) {
      throw new ValidationError('each goal atom needs a predicate and arguments');
    }
    for (const part of atom) {
      if (typeof part !== 'string' || !ATOM_PART.test(part)) {
        throw new ValidationError(`malformed atom term: ${JSON.stringify(part)}`);
      }
    }
    return atom as string[];
  });
}

export function parseGoalText(text: string): string[][] {
  // one atom per line: "temperature-reported office1"
  const atoms = text
    .split('\n')
    .map((line) => line.trim())
    .filter((line) => line.length > 0)
    .map((line) => line.split(/\s+/));
  return validateGoalAtoms(atoms);
}

export class CommandFactory {
  constructor(private nextId: () => string = defaultIdGenerator()) {}

  submitGoal(goal: string[][], mode?: Mode): CommandFrame {
    const atoms = validateGoalAtoms(goal);
    const frame: CommandFrame = { cmd: 'submit_goal', id: this.nextId(), goal: atoms };
    if (mode) frame.mode = mode;
    return frame;
  }

  respondQuery(conversationId: string, answer: string): CommandFrame {
    if (!conversationId) throw new ValidationError('missing conversation id');
    return { cmd: 'respond_query', id: this.nextId(), conversation_id: conversationId, answer };
  }

  injectFailure(agent: string, state: 'down' | 'up'): CommandFrame {
    if (!agent) throw new ValidationError('missing agent id');
    if (state !== 'down' && state !== 'up') throw new ValidationError('state must be down or up');
    return { cmd: 'inject_failure', id: this.nextId(), agent, state };
  }

  setMode(mode: Mode): CommandFrame {
    if (mode !== 'centralized' && mode !== 'decentralized') {
      throw new ValidationError(`unknown mode ${mode}`);
    }
    return { cmd: 'set_mode', id: this.nextId(), mode };
  }
}
