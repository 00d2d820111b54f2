/**
 * View state and pure helpers. The client never rescores anything: every
 * number rendered comes from a service response verbatim; the only derived
 * quantities are presentation geometry (gauge coordinates, list means).
 */

import type { EquityMetrics, ItemSummary, Recommendation } from './api.ts';

export interface SigmaPoint {
  event: number;
  sigma: number;
}

export interface ViewState {
  sessionId: string | null;
  sigma: number | null;
  sigmaHistory: SigmaPoint[];
  recommendations: Recommendation[];
  /** Bumped on every successful list refresh; lets tests and tooling detect staleness. */
  listVersion: number;
  seeds: ItemSummary[];
  searchResults: ItemSummary[];
  metrics: EquityMetrics | null;
  error: string | null;
}

export function initialState(): ViewState {
  return {
    sessionId: null,
    sigma: null,
    sigmaHistory: [],
    recommendations: [],
    listVersion: 0,
    seeds: [],
    searchResults: [],
    metrics: null,
    error: null,
  };
}

/** Append a sigma observation (one per server event, including repeats). */
export function recordSigma(state: ViewState, sigma: number): void {
  state.sigma = sigma;
  state.sigmaHistory.push({ event: state.sigmaHistory.length, sigma });
}

/** Distance where the diversity score peaks, for the gauge marker. */
export function optimalDistance(sigma: number): number {
  return Math.sqrt(3) * sigma;
}

export function meanDistance(recs: Recommendation[]): number {
  if (recs.length === 0) return 0;
  let total = 0;
  for (const rec of recs) total += rec.distance;
  return total / recs.length;
}

export function addSeed(state: ViewState, item: ItemSummary): boolean {
  if (state.seeds.some((s) => s.id === item.id)) return false;
  state.seeds.push(item);
  return true;
}

export function removeSeed(state: ViewState, itemId: string): void {
  state.seeds = state.seeds.filter((s) => s.id !== itemId);
}

/** Polyline points for the sigma gauge, in a width x height viewbox. */
export function sigmaPolyline(
  history: SigmaPoint[],
  width: number,
  height: number,
  sigmaMin = 0.05,
  sigmaMax = 0.5,
): string {
  if (history.length === 0) return '';
  const span = sigmaMax - sigmaMin;
  const stepX = history.length > 1 ? width / (history.length - 1) : 0;
  return history
    .map((point, i) => {
      const x = history.length > 1 ? i * stepX : width / 2;
      const y = height - ((point.sigma - sigmaMin) / span) * height;
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(' ');
}

export function formatScore(value: number): string {
  return value.toFixed(3);
}

export function bandLabel(band: string): string {
  return band.charAt(0).toUpperCase() + band.slice(1);
}
