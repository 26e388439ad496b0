// All UI state in one plain object plus a pure reducer. The server is
// the source of truth; this layer only tracks what is in flight and
// which cards are expanded, and guards against double submission.

import type { Decision, QueueView, SessionSummary } from "./types.js";

export interface AdvanceMemo {
  fromEpsilon: number;
  toEpsilon: number;
  newLabels: string[];
}

export interface UiState {
  session: SessionSummary | null;
  queue: QueueView | null;
  inFlight: Record<string, boolean>;
  sent: Record<string, boolean>;
  drafts: Record<string, Decision>;
  advancing: boolean;
  lastAdvance: AdvanceMemo | null;
  notice: string | null;
  expanded: Record<string, boolean>;
}

export function initialState(): UiState {
  return {
    session: null,
    queue: null,
    inFlight: {},
    sent: {},
    drafts: {},
    advancing: false,
    lastAdvance: null,
    notice: null,
    expanded: {},
  };
}

export type UiEvent =
  | { type: "session-loaded"; session: SessionSummary }
  | { type: "queue-loaded"; queue: QueueView }
  | { type: "draft-changed"; ref: string; decision: Decision }
  | { type: "decision-started"; ref: string }
  | { type: "decision-ok"; ref: string; session: SessionSummary }
  | { type: "decision-conflict"; ref: string; detail: string }
  | { type: "decision-failed"; ref: string; detail: string }
  | { type: "advance-started" }
  | { type: "advance-ok"; session: SessionSummary; fromEpsilon: number }
  | { type: "advance-failed"; detail: string }
  | { type: "toggle-expand"; ref: string }
  | { type: "notice-cleared" };

export function reduce(state: UiState, event: UiEvent): UiState {
  switch (event.type) {
    case "session-loaded":
      return { ...state, session: event.session };
    case "queue-loaded": {
      // A fresh queue means fresh per-item bookkeeping, except drafts for
      // refs that are still pending (a conflict must not eat typed input).
      const pending = new Set(
        event.queue.items.filter((i) => i.status === "pending")
          .map((i) => i.ref));
      const drafts: Record<string, Decision> = {};
      for (const [ref, d] of Object.entries(state.drafts)) {
        if (pending.has(ref)) drafts[ref] = d;
      }
      return { ...state, queue: event.queue, drafts, inFlight: {}, sent: {} };
    }
    case "draft-changed":
      return {
        ...state,
        drafts: { ...state.drafts, [event.ref]: event.decision },
      };
    case "decision-started":
      return {
        ...state,
        inFlight: { ...state.inFlight, [event.ref]: true },
        notice: null,
      };
    case "decision-ok": {
      const inFlight = { ...state.inFlight };
      delete inFlight[event.ref];
      const drafts = { ...state.drafts };
      delete drafts[event.ref];
      return {
        ...state,
        session: event.session,
        inFlight,
        sent: { ...state.sent, [event.ref]: true },
        drafts,
      };
    }
    case "decision-conflict": {
      const inFlight = { ...state.inFlight };
      delete inFlight[event.ref];
      // Mark it sent: the server already holds a decision for this item,
      // so re-sending would only earn another 409.
      return {
        ...state,
        inFlight,
        sent: { ...state.sent, [event.ref]: true },
        notice: `conflict on ${event.ref}: ${event.detail}`,
      };
    }
    case "decision-failed": {
      const inFlight = { ...state.inFlight };
      delete inFlight[event.ref];
      // Draft stays; the retry affordance is the still-armed form.
      return {
        ...state,
        inFlight,
        notice: `could not submit ${event.ref}: ${event.detail}`,
      };
    }
    case "advance-started":
      return { ...state, advancing: true, notice: null };
    case "advance-ok":
      // The server clears new_labels_this_round when the round closes,
      // so the memo has to take them from the session we advanced from.
      return {
        ...state,
        advancing: false,
        session: event.session,
        lastAdvance: {
          fromEpsilon: event.fromEpsilon,
          toEpsilon: event.session.epsilon,
          newLabels: state.session?.new_labels_this_round ?? [],
        },
      };
    case "advance-failed":
      return { ...state, advancing: false, notice: event.detail };
    case "toggle-expand":
      return {
        ...state,
        expanded: {
          ...state.expanded,
          [event.ref]: !state.expanded[event.ref],
        },
      };
    case "notice-cleared":
      return { ...state, notice: null };
  }
}

export function pendingCount(state: UiState): number {
  if (!state.queue) return 0;
  return state.queue.items.filter(
    (i) => i.status === "pending" && !state.sent[i.ref]).length;
}

export function canSubmit(state: UiState, ref: string): boolean {
  if (state.session?.terminal) return false;
  if (state.inFlight[ref] || state.sent[ref]) return false;
  const item = state.queue?.items.find((i) => i.ref === ref);
  return item !== undefined && item.status === "pending";
}

export function advanceEnabled(state: UiState): boolean {
  if (!state.session || state.session.terminal || state.advancing) {
    return false;
  }
  if (Object.keys(state.inFlight).length > 0) return false;
  return pendingCount(state) === 0;
}
