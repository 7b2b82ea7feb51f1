// Browser bootstrap: connect to the gateway, re-render panels on every state
// change, and wire the operator controls.

import { ConsoleClient } from './client.js';
import { ValidationError, parseGoalText } from './commands.js';
import {
  renderConversationsPanel,
  renderErrors,
  renderFeedPanel,
  renderLivenessPanel,
  renderMapPanel,
  renderQueryPanel,
  renderStatusBar,
} from './render.js';
import type { Mode } from './protocol.js';

function byId(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

const params = new URLSearchParams(window.location.search);
const url = params.get('gateway') ?? 'ws://127.0.0.1:8765';

const client = new ConsoleClient(url, {
  socketFactory: (u) => new WebSocket(u) as never,
  onChange: (state) => {
    byId('status').innerHTML = renderStatusBar(state);
    byId('map').innerHTML = renderMapPanel(state);
    byId('liveness').innerHTML = renderLivenessPanel(state);
    byId('conversations').innerHTML = renderConversationsPanel(state);
    byId('queries').innerHTML = renderQueryPanel(state);
    byId('feed').innerHTML = renderFeedPanel(state);
    byId('errors').innerHTML = renderErrors(state);
  },
});

client.connect();

byId('submit-goal').addEventListener('click', () => {
  const text = (byId('goal-input') as HTMLTextAreaElement).value;
  const mode = (byId('mode-select') as HTMLSelectElement).value as Mode | '';
  const inline = byId('goal-error');
  inline.textContent = '';
  try {
    const goal = parseGoalText(text);
    client.submitGoal(goal, mode || undefined);
  } catch (err) {
    if (err instanceof ValidationError) {
      inline.textContent = err.message;
    } else {
      throw err;
    }
  }
});

byId('queries').addEventListener('click', (ev) => {
  const target = ev.target as HTMLElement;
  const conv = target.getAttribute('data-query');
  if (!conv) return;
  const answer = window.prompt(`Answer query ${conv}:`, 'ok');
  if (answer !== null) {
    client.respondQuery(conv, answer);
  }
});

byId('inject-failure').addEventListener('click', () => {
  const agent = (byId('failure-agent') as HTMLInputElement).value.trim();
  const state = (byId('failure-state') as HTMLSelectElement).value as 'down' | 'up';
  if (agent) client.injectFailure(agent, state);
});
