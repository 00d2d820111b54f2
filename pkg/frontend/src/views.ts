/**
 * DOM rendering. Every renderer rewrites one region from the current state;
 * no virtual DOM, no client-side derivation beyond layout geometry.
 */

import type { ItemSummary, Recommendation, Verdict } from './api.ts';
import { ViewState, bandLabel, formatScore, optimalDistance, sigmaPolyline } from './state.ts';

export interface Handlers {
  onAddSeed(item: ItemSummary): void;
  onRemoveSeed(itemId: string): void;
  onFeedback(itemId: string, verdict: Verdict): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderError(root: HTMLElement, state: ViewState): void {
  const banner = root.querySelector('#error-banner') as HTMLElement;
  banner.textContent = state.error ?? '';
  banner.hidden = state.error === null;
}

export function renderSearchResults(root: HTMLElement, state: ViewState, handlers: Handlers): void {
  const doc = root.ownerDocument;
  const list = root.querySelector('#search-results') as HTMLElement;
  list.replaceChildren();
  for (const item of state.searchResults) {
    const row = el(doc, 'li', 'search-row');
    row.append(el(doc, 'span', 'title', item.title), el(doc, 'span', 'artist', item.artist));
    const add = el(doc, 'button', 'add-seed', '+ seed');
    add.addEventListener('click', () => handlers.onAddSeed(item));
    row.append(add);
    list.append(row);
  }
}

export function renderSeeds(root: HTMLElement, state: ViewState, handlers: Handlers): void {
  const doc = root.ownerDocument;
  const list = root.querySelector('#seed-list') as HTMLElement;
  list.replaceChildren();
  for (const seed of state.seeds) {
    const row = el(doc, 'li', 'seed-row', `${seed.title} — ${seed.artist}`);
    const remove = el(doc, 'button', 'remove-seed', 'x');
    remove.addEventListener('click', () => handlers.onRemoveSeed(seed.id));
    row.append(remove);
    list.append(row);
  }
  const start = root.querySelector('#start-session') as HTMLButtonElement;
  start.disabled = state.seeds.length === 0;
}

export function renderSession(root: HTMLElement, state: ViewState): void {
  const info = root.querySelector('#session-info') as HTMLElement;
  const sigmaNode = root.querySelector('#sigma-value') as HTMLElement;
  if (state.sessionId === null) {
    info.hidden = true;
    sigmaNode.textContent = '';
    return;
  }
  info.hidden = false;
  (root.querySelector('#session-id') as HTMLElement).textContent = state.sessionId;
  const hasSigma = typeof state.sigma === 'number';
  sigmaNode.textContent = hasSigma ? (state.sigma as number).toPrecision(6) : '';
  // The exact server value rides along for tests and tooling; the visible
  // text is a formatted view of the same number.
  sigmaNode.dataset.sigma = hasSigma ? String(state.sigma) : '';
}

export function renderRecommendations(root: HTMLElement, state: ViewState, handlers: Handlers): void {
  const doc = root.ownerDocument;
  const list = root.querySelector('#recommendations') as HTMLElement;
  list.dataset.version = String(state.listVersion);
  list.replaceChildren();
  for (const rec of state.recommendations) {
    const row = el(doc, 'li', `rec-row band-${rec.band}`);
    row.dataset.itemId = rec.item_id;
    row.dataset.distance = String(rec.distance);
    row.dataset.bold = String(rec.bold);

    const head = el(doc, 'div', 'rec-head');
    head.append(el(doc, 'span', 'rank', `#${rec.rank}`));
    head.append(el(doc, 'span', 'title', rec.title));
    if (rec.artist) head.append(el(doc, 'span', 'artist', rec.artist));
    if (rec.bold) {
      const badge = el(doc, 'span', 'bold-badge', 'bold');
      badge.title = 'outside your usual listening distance';
      head.append(badge);
    }
    head.append(el(doc, 'span', 'band', bandLabel(rec.band)));
    row.append(head);

    const scores = el(doc, 'div', 'rec-scores');
    scores.append(el(doc, 'span', 'distance', `d=${formatScore(rec.distance)}`));
    scores.append(el(doc, 'span', 'raw', `raw ${formatScore(rec.raw_score)}`));
    scores.append(el(doc, 'span', 'adjusted', `adj ${formatScore(rec.adjusted_score)}`));
    row.append(scores);

    const actions = el(doc, 'div', 'rec-actions');
    const accept = el(doc, 'button', 'accept', 'accept');
    accept.addEventListener('click', () => handlers.onFeedback(rec.item_id, 'accept'));
    const reject = el(doc, 'button', 'reject', 'reject');
    reject.addEventListener('click', () => handlers.onFeedback(rec.item_id, 'reject'));
    actions.append(accept, reject);
    row.append(actions);

    list.append(row);
  }
}

export function renderSigmaGauge(root: HTMLElement, state: ViewState): void {
  const polyline = root.querySelector('#sigma-line') as SVGPolylineElement | null;
  const marker = root.querySelector('#dstar-value') as HTMLElement;
  if (polyline) {
    polyline.setAttribute('points', sigmaPolyline(state.sigmaHistory, 260, 80));
  }
  marker.textContent =
    state.sigma === null ? '' : `d* = ${optimalDistance(state.sigma).toPrecision(4)}`;
}

export function renderMetrics(root: HTMLElement, state: ViewState): void {
  const gini = root.querySelector('#metric-gini') as HTMLElement;
  const coverage = root.querySelector('#metric-coverage') as HTMLElement;
  const total = root.querySelector('#metric-exposures') as HTMLElement;
  if (state.metrics === null) {
    gini.textContent = coverage.textContent = total.textContent = '—';
    return;
  }
  gini.textContent = state.metrics.gini.toFixed(4);
  coverage.textContent = state.metrics.coverage.toFixed(4);
  total.textContent = String(state.metrics.total_exposures);
}

export function renderAll(root: HTMLElement, state: ViewState, handlers: Handlers): void {
  renderError(root, state);
  renderSearchResults(root, state, handlers);
  renderSeeds(root, state, handlers);
  renderSession(root, state);
  renderRecommendations(root, state, handlers);
  renderSigmaGauge(root, state);
  renderMetrics(root, state);
}
