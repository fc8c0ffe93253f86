/**
 * Browser entry point. Everything DOM-flavored lives here; the modules it
 * calls are pure and covered by the test suite.
 *
 * Expects the surveybn service on the same origin or on the URL provided via
 * ?api=http://host:port.
 */

import { HttpClient } from './api.js';
import type { GraphPayload, VariablesPayload } from './api.js';
import { renderGraph } from './graph.js';
import {
  clearAllEvidence,
  clearEvidence,
  newSession,
  pinBaseline,
  selectTarget,
  setEvidence,
} from './state.js';
import type { SessionState } from './state.js';
import { displayView, refresh } from './viewmodel.js';

const apiBase =
  new URLSearchParams(window.location.search).get('api') ?? window.location.origin;
const client = new HttpClient(apiBase);

let session: SessionState;
let graph: GraphPayload;

function el<T extends HTMLElement>(selector: string): T {
  const node = document.querySelector<T>(selector);
  if (!node) {
    throw new Error(`missing element: ${selector}`);
  }
  return node;
}

function renderEvidencePanel(): string {
  const rows = session.variables
    .filter((v) => v.name !== session.target.variable)
    .map((v) => {
      const current = session.evidence[v.name] ?? '';
      const options = ['<option value="">(unset)</option>']
        .concat(
          v.states.map(
            (s) =>
              `<option value="${s}" ${s === current ? 'selected' : ''}>${s}</option>`,
          ),
        )
        .join('');
      return `<label class="evidence-row">${v.name}
        <select data-variable="${v.name}">${options}</select></label>`;
    });
  return rows.join('\n');
}

function renderTargetPicker(): string {
  return session.variables
    .map(
      (v) =>
        `<option value="${v.name}" ${
          v.name === session.target.variable ? 'selected' : ''
        }>${v.name}</option>`,
    )
    .join('');
}

function render(): void {
  const view = displayView(session);
  el('#target-picker').innerHTML = renderTargetPicker();
  el('#evidence-panel').innerHTML = renderEvidencePanel();

  const bars = view.bars
    .map(
      (bar) => `
      <div class="bar-row">
        <span class="bar-state">${bar.state}</span>
        <div class="bar-track">
          <div class="bar-fill" style="width:${(bar.share * 100).toFixed(1)}%"></div>
        </div>
        <span class="bar-label">${bar.label}</span>
      </div>`,
    )
    .join('\n');
  el('#posterior').innerHTML = bars || '<p class="muted">no response yet</p>';
  el('#evidence-probability').textContent = view.evidenceLabel;

  const badge = el('#delta-badge');
  badge.textContent = view.deltaBadge ? `${view.deltaBadge} pts vs baseline` : '';
  badge.className = view.deltaBadge.startsWith('-') ? 'badge negative' : 'badge positive';

  const banner = el('#banner');
  banner.textContent = view.banner ?? '';
  banner.style.display = view.banner ? 'block' : 'none';

  const graphView = renderGraph(graph);
  if (graphView.kind === 'svg') {
    el('#graph').innerHTML = graphView.markup;
  } else {
    el('#graph').innerHTML = `<ul>${graphView.lines
      .map((line) => `<li>${line}</li>`)
      .join('')}</ul>`;
  }
  el('#fingerprint').textContent = view.fingerprint
    ? `model ${view.fingerprint.slice(0, 12)}`
    : '';
}

async function update(): Promise<void> {
  await refresh(session, client);
  render();
}

function wireEvents(): void {
  el('#evidence-panel').addEventListener('change', (event) => {
    const select = event.target as HTMLSelectElement;
    const variable = select.dataset.variable;
    if (!variable) {
      return;
    }
    if (select.value === '') {
      clearEvidence(session, variable);
    } else {
      setEvidence(session, variable, select.value);
    }
    void update();
  });
  el('#target-picker').addEventListener('change', (event) => {
    selectTarget(session, (event.target as HTMLSelectElement).value);
    void update();
  });
  el('#clear-evidence').addEventListener('click', () => {
    clearAllEvidence(session);
    void update();
  });
  el('#pin-baseline').addEventListener('click', () => {
    pinBaseline(session);
    void update();
  });
  el('#graph').addEventListener('click', (event) => {
    const hit = (event.target as Element).closest('[data-node]');
    const name = hit?.getAttribute('data-node');
    if (name && name !== session.target.variable) {
      el<HTMLSelectElement>(`select[data-variable="${name}"]`)?.focus();
    }
  });
}

async function init(): Promise<void> {
  try {
    const [vars, graphPayload]: [VariablesPayload, GraphPayload] = await Promise.all([
      client.variables(),
      client.graph(),
    ]);
    graph = graphPayload;
    session = newSession(vars.variables, vars.variables[0].name);
    wireEvents();
    await update();
  } catch (err) {
    el('#banner').textContent = `Could not reach the model service at ${apiBase}: ${String(err)}`;
    el('#banner').style.display = 'block';
  }
}

void init();
