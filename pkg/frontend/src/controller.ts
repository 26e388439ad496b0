// Glue between the API client and the reducer. Every mutation goes to
// the server first and the visible state is rebuilt from what the
// server answers, so a reload always reproduces the same picture.

import { ApiClient, ApiError } from "./api.js";
import { advanceEnabled, canSubmit, reduce, UiState } from "./state.js";
import type { Decision } from "./types.js";

export class Controller {
  private state: UiState;
  private readonly api: ApiClient;
  private readonly sessionId: string;
  private readonly onChange: (state: UiState) => void;

  constructor(
    api: ApiClient,
    sessionId: string,
    initial: UiState,
    onChange: (state: UiState) => void,
  ) {
    this.api = api;
    this.sessionId = sessionId;
    this.state = initial;
    this.onChange = onChange;
  }

  current(): UiState {
    return this.state;
  }

  private apply(event: Parameters<typeof reduce>[1]): void {
    this.state = reduce(this.state, event);
    this.onChange(this.state);
  }

  async loadAll(): Promise<void> {
    const session = await this.api.getSession(this.sessionId);
    this.apply({ type: "session-loaded", session });
    const queue = await this.api.getQueue(this.sessionId);
    this.apply({ type: "queue-loaded", queue });
  }

  toggleExpand(ref: string): void {
    this.apply({ type: "toggle-expand", ref });
  }

  clearNotice(): void {
    this.apply({ type: "notice-cleared" });
  }

  setDraft(ref: string, decision: Decision): void {
    this.apply({ type: "draft-changed", ref, decision });
  }

  async submitDecision(ref: string, decision: Decision): Promise<void> {
    if (!canSubmit(this.state, ref)) return;
    this.apply({ type: "decision-started", ref });
    try {
      const session = await this.api.postLabel(this.sessionId, ref, decision);
      this.apply({ type: "decision-ok", ref, session });
      const queue = await this.api.getQueue(this.sessionId);
      this.apply({ type: "queue-loaded", queue });
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // Someone (or an earlier click) already decided this bundle.
        // Keep the server's view, show what happened, drop nothing else.
        this.apply({ type: "decision-conflict", ref, detail: err.detail });
        const queue = await this.api.getQueue(this.sessionId);
        this.apply({ type: "queue-loaded", queue });
        return;
      }
      const detail = err instanceof ApiError ? err.detail : String(err);
      this.apply({ type: "decision-failed", ref, detail });
    }
  }

  async advance(): Promise<void> {
    if (!advanceEnabled(this.state)) return;
    const fromEpsilon = this.state.session!.epsilon;
    this.apply({ type: "advance-started" });
    try {
      const session = await this.api.postAdvance(this.sessionId);
      this.apply({ type: "advance-ok", session, fromEpsilon });
      const queue = await this.api.getQueue(this.sessionId);
      this.apply({ type: "queue-loaded", queue });
    } catch (err) {
      const detail = err instanceof ApiError ? err.detail : String(err);
      this.apply({ type: "advance-failed", detail });
    }
  }
}
