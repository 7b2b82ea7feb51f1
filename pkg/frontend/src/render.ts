// Pure HTML builders for the five panels: map, liveness, conversations,
// query inbox, event feed. Kept DOM-free so rendering is testable; main.ts
// owns the actual document wiring.

import type { ConsoleState } from './viewmodel.js';
import { conversationList, mapMarkers, openQueries } from './viewmodel.js';

function esc(text: unknown): string {
  return String(text)
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

export function renderStatusBar(state: ConsoleState): string {
  const warn = state.pendingWarning
    ? ` <span class="warn">${state.pendingWarning} command(s) queued offline</span>`
    : '';
  return `<span class="conn ${state.connection}">${state.connection}</span>`
    + ` <span class="tick">tick ${state.tick}</span>${warn}`;
}

export function renderMapPanel(state: ConsoleState): string {
  if (!state.map) return '<p class="empty">waiting for snapshot</p>';
  const markers = mapMarkers(state);
  const byNode = new Map<string, string[]>();
  for (const m of markers) {
    const label = m.status === 'dead' ? `${m.id} (dead)` : m.id;
    byNode.set(m.node, [...(byNode.get(m.node) ?? []), label]);
  }
  const rows = state.map.nodes.map((node) => {
    const temp = state.world?.temperatures[node];
    const tempCell = temp === undefined ? '' : `${temp}°C`;
    const occupants = (byNode.get(node) ?? []).map(esc).join(', ');
    return `<tr><td>${esc(node)}</td><td>${tempCell}</td><td>${occupants}</td></tr>`;
  });
  const edges = state.map.edges
    .map(([a, b, w]) => `${esc(a)}—${esc(b)} (${w})`)
    .join(', ');
  return `<table><thead><tr><th>room</th><th>temp</th><th>agents</th></tr></thead>`
    + `<tbody>${rows.join('')}</tbody></table><p class="edges">${edges}</p>`;
}

export function renderLivenessPanel(state: ConsoleState): string {
  if (!state.agents.length) return '<p class="empty">no heartbeats yet</p>';
  const rows = state.agents.map((row) =>
    `<tr class="${row.status}"><td>${esc(row.id)}</td><td>${row.status}</td>`
    + `<td>${row.last_seen}</td><td>${esc(row.location ?? '-')}</td>`
    + `<td>${row.schemas}</td></tr>`);
  return `<table><thead><tr><th>agent</th><th>status</th><th>last seen</th>`
    + `<th>location</th><th>schemas</th></tr></thead><tbody>${rows.join('')}</tbody></table>`;
}

export function renderConversationsPanel(state: ConsoleState): string {
  const conversations = conversationList(state);
  if (!conversations.length) return '<p class="empty">no goals submitted</p>';
  const rows = conversations.map((c) => {
    const goal = c.goal.map((atom) => `(${atom.join(' ')})`).join(' ');
    const reason = c.reason ? ` – ${esc(c.reason)}` : '';
    return `<tr class="${c.status}"><td>${esc(c.conversationId)}</td>`
      + `<td>${esc(goal)}</td><td>${c.status}${reason}</td><td>${c.lastTick}</td></tr>`;
  });
  return `<table><thead><tr><th>conversation</th><th>goal</th><th>status</th>`
    + `<th>tick</th></tr></thead><tbody>${rows.join('')}</tbody></table>`;
}

export function renderQueryPanel(state: ConsoleState): string {
  const queries = openQueries(state);
  if (!queries.length) return '<p class="empty">no open queries</p>';
  const rows = queries.map((q) =>
    `<tr><td>${esc(q.conversationId)}</td><td>${esc(q.asker)}</td>`
    + `<td>${esc(q.prompt)}</td>`
    + `<td><button data-query="${esc(q.conversationId)}">answer</button></td></tr>`);
  return `<table><thead><tr><th>conversation</th><th>from</th><th>prompt</th>`
    + `<th></th></tr></thead><tbody>${rows.join('')}</tbody></table>`;
}

export function renderFeedPanel(state: ConsoleState, limit = 40): string {
  const entries = state.feed.slice(-limit).reverse();
  if (!entries.length) return '<p class="empty">quiet so far</p>';
  const rows = entries.map((e) =>
    `<tr><td>${e.tick}</td><td>${esc(e.performative)}/${esc(e.kind)}</td>`
    + `<td>${esc(e.sender)} → ${esc(e.recipient)}</td>`
    + `<td>${esc(e.conversationId)}</td></tr>`);
  return `<table><thead><tr><th>tick</th><th>message</th><th>route</th>`
    + `<th>conversation</th></tr></thead><tbody>${rows.join('')}</tbody></table>`;
}

export function renderErrors(state: ConsoleState): string {
  if (!state.commandErrors.length) return '';
  return state.commandErrors
    .slice(-3)
    .map((e) => `<p class="error">${esc(e.message)}${e.ref ? ` (${esc(e.ref)})` : ''}</p>`)
    .join('');
}
