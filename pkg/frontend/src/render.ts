// Render-to-string views. No DOM dependency here so the whole module
// stays testable in plain node; app.ts swaps the output into the page
// and wires events by data-action attributes.

import {
  amountTitle, assetLabel, epsilonText, escapeHtml, sciAmount, shortHex,
} from "./format.js";
import { advanceEnabled, pendingCount, UiState } from "./state.js";
import type { ActionDoc, FindingDoc, QueueItem, TransactionDoc } from "./types.js";

export function renderApp(state: UiState): string {
  if (!state.session) return `<p class="loading">loading session...</p>`;
  const parts = [renderHeader(state)];
  if (state.notice) {
    parts.push(`<div class="notice" role="alert">${escapeHtml(state.notice)}
      <button data-action="dismiss-notice">x</button></div>`);
  }
  if (state.lastAdvance) parts.push(renderAdvanceMemo(state));
  if (state.session.terminal) {
    parts.push(renderTerminal(state));
  } else {
    parts.push(renderQueue(state));
    parts.push(renderAdvanceBar(state));
  }
  return parts.join("\n");
}

function renderHeader(state: UiState): string {
  const s = state.session!;
  const chips = s.label_set.map((label) => {
    const fresh = s.new_labels_this_round.includes(label);
    return `<span class="chip${fresh ? " chip-new" : ""}">${escapeHtml(label)}</span>`;
  }).join("");
  return `<header>
    <h1>${escapeHtml(s.session_id)}</h1>
    <div class="meta">round ${s.round} &middot; &epsilon; ${epsilonText(s.epsilon)}
      &middot; corpus ${s.counts.corpus} &middot; reviewed ${s.counts.reviewed}</div>
    <div class="labels">${chips}</div>
  </header>`;
}

function renderAdvanceMemo(state: UiState): string {
  const memo = state.lastAdvance!;
  const labels = memo.newLabels.length
    ? `new labels: ${memo.newLabels.map(escapeHtml).join(", ")}`
    : "no new labels";
  return `<div class="advance-memo">&epsilon; ${epsilonText(memo.fromEpsilon)}
    &rarr; ${epsilonText(memo.toEpsilon)} &middot;
    corpus ${state.session!.counts.corpus} &middot; ${labels}</div>`;
}

function renderTerminal(state: UiState): string {
  const s = state.session!;
  return `<section class="terminal">
    <h2>session finished</h2>
    <p>reason: ${escapeHtml(s.terminal_reason ?? "unknown")}</p>
    <p>${s.counts.reviewed} bundles reviewed, ${s.counts.corpus} left
      unexplained, ${s.label_set.length} labels known.</p>
  </section>`;
}

interface Group {
  cluster: number;
  size: number;
  items: QueueItem[];
}

export function groupItems(items: QueueItem[]): Group[] {
  const byCluster = new Map<number, Group>();
  const noise: Group[] = [];
  for (const item of items) {
    if (item.cluster < 0) {
      noise.push({ cluster: item.cluster, size: 1, items: [item] });
      continue;
    }
    let group = byCluster.get(item.cluster);
    if (!group) {
      group = { cluster: item.cluster, size: item.cluster_size, items: [] };
      byCluster.set(item.cluster, group);
    }
    group.items.push(item);
  }
  const groups = [...byCluster.values()];
  groups.sort((a, b) => b.size - a.size || a.cluster - b.cluster);
  return groups.concat(noise);
}

export function renderQueue(state: UiState): string {
  const queue = state.queue;
  if (!queue) return `<p class="loading">loading queue...</p>`;
  if (queue.items.length === 0) {
    return `<section class="round-complete">
      <h2>round complete</h2>
      <p>nothing queued for review this round.</p>
    </section>`;
  }
  const groups = groupItems(queue.items).map((group) => {
    const title = group.cluster < 0
      ? "noise"
      : `cluster ${group.cluster} &middot; ${group.size} bundle${group.size === 1 ? "" : "s"}`;
    const cards = group.items.map((i) => renderItem(state, i)).join("\n");
    return `<section class="cluster-group" data-cluster="${group.cluster}">
      <h3>${title}</h3>${cards}</section>`;
  });
  return `<main>${groups.join("\n")}</main>`;
}

function resolved(state: UiState, item: QueueItem): boolean {
  return item.status !== "pending" || !!state.sent[item.ref];
}

export function renderItem(state: UiState, item: QueueItem): string {
  const done = resolved(state, item);
  const status = item.status === "labeled"
    ? `labeled: ${escapeHtml(item.label ?? "?")}`
    : item.status;
  const findings = (item.findings ?? []).map(renderFinding).join("");
  const open = !!state.expanded[item.ref];
  const body = open ? renderTimeline(item) : "";
  const controls = done || state.session?.terminal
    ? ""
    : renderControls(state, item);
  return `<article class="card${done ? " resolved" : ""}" data-ref="${escapeHtml(item.ref)}">
    <div class="card-head">
      <span class="ref">${escapeHtml(item.ref)}</span>
      <span class="status status-${item.status}">${status}</span>
      <button data-action="toggle" data-ref="${escapeHtml(item.ref)}">
        ${open ? "hide" : "inspect"}</button>
    </div>
    <div class="findings">${findings || "<em>no detector findings</em>"}</div>
    ${body}
    ${controls}
  </article>`;
}

function renderFinding(f: FindingDoc): string {
  let profit = "";
  if (f.profit !== undefined && f.profit_asset !== undefined) {
    profit = ` <span class="amt" title="${escapeHtml(amountTitle(f.profit, f.profit_asset))}">
      ${escapeHtml(sciAmount(f.profit))} ${escapeHtml(assetLabel(f.profit_asset))}</span>`;
  }
  return `<span class="finding" title="${escapeHtml(f.activity_name)}">
    ${escapeHtml(f.activity)}${profit}</span>`;
}

function renderTimeline(item: QueueItem): string {
  const txs = item.transactions;
  if (!txs || txs.length === 0) {
    return `<div class="timeline"><em>bundle contents unavailable</em></div>`;
  }
  return `<div class="timeline">${txs.map(renderTx).join("")}</div>`;
}

function renderTx(tx: TransactionDoc, index: number): string {
  const who = `${tx.sender ? shortHex(tx.sender) : "?"} &rarr; ${tx.recipient ? shortHex(tx.recipient) : "create"}`;
  const actions = tx.actions.length
    ? tx.actions.map(renderAction).join("")
    : `<li class="action none"><em>no lifted actions</em></li>`;
  return `<div class="tx">
    <div class="tx-head">tx ${index} &middot; ${shortHex(tx.hash)} &middot; ${who}</div>
    <ul class="actions">${actions}</ul>
  </div>`;
}

function renderAction(a: ActionDoc): string {
  const params = a.params.map((p) => {
    const arrow = p.dir === "in" ? "&larr;" : "&rarr;";
    return `<span class="param">${arrow}
      <span class="amt" title="${escapeHtml(amountTitle(p.amount, p.asset))}">
        ${escapeHtml(sciAmount(p.amount))}</span>
      ${escapeHtml(assetLabel(p.asset))}</span>`;
  }).join(" ");
  const tokenId = a.token_id !== undefined ? ` #${a.token_id}` : "";
  return `<li class="action">
    <span class="action-type">${escapeHtml(a.type)}${tokenId}</span>
    @ ${shortHex(a.contract)} ${params}</li>`;
}

function renderControls(state: UiState, item: QueueItem): string {
  const busy = !!state.inFlight[item.ref];
  const dis = busy ? " disabled" : "";
  const labels = state.session!.label_set.map(
    (l) => `<option value="${escapeHtml(l)}">${escapeHtml(l)}</option>`).join("");
  const draft = state.drafts[item.ref];
  const draftLabel = draft && draft.kind === "new" && draft.label
    ? escapeHtml(draft.label) : "";
  return `<div class="controls${busy ? " busy" : ""}">
    <select data-field="known" data-ref="${escapeHtml(item.ref)}"${dis}>${labels}</select>
    <button data-action="known" data-ref="${escapeHtml(item.ref)}"${dis}>known</button>
    <input data-field="new" data-ref="${escapeHtml(item.ref)}"
      placeholder="new kind" value="${draftLabel}"${dis}>
    <button data-action="new" data-ref="${escapeHtml(item.ref)}"${dis}>new</button>
    <button data-action="dismiss" data-ref="${escapeHtml(item.ref)}"${dis}>dismiss</button>
  </div>`;
}

export function renderAdvanceBar(state: UiState): string {
  const enabled = advanceEnabled(state);
  const pending = pendingCount(state);
  const hint = enabled
    ? "close this round and re-cluster"
    : state.advancing
      ? "advancing..."
      : `${pending} item${pending === 1 ? "" : "s"} still pending`;
  return `<footer class="advance-bar">
    <button data-action="advance"${enabled ? "" : " disabled"}>advance round</button>
    <span class="hint">${escapeHtml(hint)}</span>
  </footer>`;
}
