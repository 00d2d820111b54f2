/**
 * Application wiring: state transitions driven by user events, each backed by
 * exactly one service call. Feedback immediately refreshes the list, so the
 * user sees the adapted radius take effect. The session id lives in the URL
 * hash; reloading rebuilds the identical view from server state.
 */

import { ApiError, DivrecClient, ItemSummary, Mode, Verdict } from './api.ts';
import { ViewState, addSeed, initialState, recordSigma, removeSeed } from './state.ts';
import { Handlers, renderAll } from './views.ts';

export interface AppOptions {
  metricsIntervalMs?: number;
}

export class App {
  readonly state: ViewState = initialState();
  private metricsTimer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: DivrecClient,
    private readonly options: AppOptions = {},
  ) {}

  private get handlers(): Handlers {
    return {
      onAddSeed: (item: ItemSummary) => {
        if (addSeed(this.state, item)) this.render();
      },
      onRemoveSeed: (itemId: string) => {
        removeSeed(this.state, itemId);
        this.render();
      },
      onFeedback: (itemId: string, verdict: Verdict) => {
        void this.sendFeedback(itemId, verdict);
      },
    };
  }

  render(): void {
    renderAll(this.root, this.state, this.handlers);
  }

  private fail(err: unknown): void {
    this.state.error =
      err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
    this.render();
  }

  private clearError(): void {
    this.state.error = null;
  }

  async start(): Promise<void> {
    this.wireControls();
    const fromHash = this.root.ownerDocument.defaultView?.location.hash ?? '';
    const match = fromHash.match(/s=([A-Za-z0-9_-]+)/);
    if (match) {
      await this.restoreSession(match[1] ?? '');
    }
    await this.refreshMetrics();
    const interval = this.options.metricsIntervalMs ?? 3000;
    if (interval > 0) {
      this.metricsTimer = setInterval(() => void this.refreshMetrics(), interval);
    }
    this.render();
  }

  stop(): void {
    if (this.metricsTimer !== null) clearInterval(this.metricsTimer);
  }

  private wireControls(): void {
    const search = this.root.querySelector('#seed-search') as HTMLInputElement;
    search.addEventListener('input', () => void this.search(search.value));
    const start = this.root.querySelector('#start-session') as HTMLButtonElement;
    start.addEventListener('click', () => void this.createSession());
    const refresh = this.root.querySelector('#recommend-btn') as HTMLButtonElement;
    refresh.addEventListener('click', () => void this.refreshRecommendations());
  }

  async search(prefix: string): Promise<void> {
    try {
      this.state.searchResults = prefix ? await this.client.searchItems(prefix) : [];
      this.clearError();
    } catch (err) {
      this.fail(err);
      return;
    }
    this.render();
  }

  async createSession(): Promise<void> {
    const sigmaField = this.root.querySelector('#sigma-input') as HTMLInputElement;
    const sigma = sigmaField.value ? Number(sigmaField.value) : undefined;
    try {
      const session = await this.client.createSession(
        this.state.seeds.map((s) => s.id),
        sigma,
      );
      this.state.sessionId = session.session_id;
      this.state.sigmaHistory = [];
      recordSigma(this.state, session.sigma);
      const win = this.root.ownerDocument.defaultView;
      if (win) win.location.hash = `s=${session.session_id}`;
      this.clearError();
    } catch (err) {
      this.fail(err);
      return;
    }
    await this.refreshRecommendations();
  }

  private readControls(): { k: number; mode: Mode; lambda: number | undefined } {
    const kField = this.root.querySelector('#k-input') as HTMLInputElement;
    const modeField = this.root.querySelector('#mode-select') as HTMLSelectElement;
    const lambdaField = this.root.querySelector('#lambda-input') as HTMLInputElement;
    return {
      k: kField.value ? Number(kField.value) : 10,
      mode: (modeField.value as Mode) || 'diverse',
      lambda: lambdaField.value === '' ? undefined : Number(lambdaField.value),
    };
  }

  /** Rebuild the view for an existing session without mutating anything. */
  async restoreSession(sessionId: string): Promise<void> {
    try {
      const view = await this.client.sessionView(sessionId);
      this.state.sessionId = view.session_id;
      this.state.recommendations = view.recommendations;
      this.state.listVersion += 1;
      this.state.sigmaHistory = [];
      recordSigma(this.state, view.sigma);
      this.clearError();
    } catch (err) {
      this.fail(err);
      return;
    }
    this.render();
  }

  async refreshRecommendations(): Promise<void> {
    if (this.state.sessionId === null) return;
    const { k, mode, lambda } = this.readControls();
    try {
      const body = await this.client.recommend(this.state.sessionId, k, mode, lambda);
      this.state.recommendations = body.recommendations;
      this.state.listVersion += 1;
      recordSigma(this.state, body.sigma);
      this.clearError();
    } catch (err) {
      this.fail(err);
      return;
    }
    this.render();
  }

  async sendFeedback(itemId: string, verdict: Verdict): Promise<void> {
    if (this.state.sessionId === null) return;
    try {
      const result = await this.client.feedback(this.state.sessionId, itemId, verdict);
      recordSigma(this.state, result.sigma_after);
      this.clearError();
    } catch (err) {
      this.fail(err);
      return;
    }
    this.render();
    await this.refreshRecommendations();
  }

  async refreshMetrics(): Promise<void> {
    try {
      this.state.metrics = await this.client.equityMetrics();
    } catch {
      return; // dashboard polling failures are transient; keep the last value
    }
    this.render();
  }
}
