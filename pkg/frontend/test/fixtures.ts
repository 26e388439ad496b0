// Builders for server payloads used across the test files.

import type {
  QueueItem, QueueView, SessionSummary,
} from "../src/types.js";

export function makeSession(
  over: Partial<SessionSummary> = {},
): SessionSummary {
  return {
    session_id: "rev-1",
    round: 0,
    epsilon: 16,
    label_set: ["SA", "CA"],
    new_labels_this_round: [],
    counts: { corpus: 6, clusters: 2, pending: 4, reviewed: 0 },
    terminal: false,
    terminal_reason: null,
    ...over,
  };
}

export function makeItem(ref: string, over: Partial<QueueItem> = {}): QueueItem {
  return {
    ref,
    cluster: 0,
    cluster_size: 2,
    status: "pending",
    label: null,
    block_number: 14200000,
    bundle_index: 0,
    coinbase: "0x" + "ab".repeat(20),
    transactions: [
      {
        hash: "0x" + "11".repeat(32),
        sender: "0x" + "22".repeat(20),
        recipient: "0x" + "33".repeat(20),
        actions: [
          {
            contract: "0x" + "44".repeat(20),
            type: "Swap",
            params: [
              { asset: "token:0x" + "55".repeat(20), amount: "50018700000000", dir: "in" },
              { asset: "token:0x" + "66".repeat(20), amount: "14082220000", dir: "out" },
            ],
          },
        ],
      },
    ],
    findings: [
      {
        block: 14200000,
        bundle_index: 0,
        activity: "RBA",
        activity_name: "rebase backrunning",
        witness: { txs: [0], contracts: [], assets: [] },
        profit: "42610000000000000000",
        profit_asset: "ether",
      },
    ],
    ...over,
  };
}

export function makeQueue(
  items: QueueItem[],
  over: Partial<QueueView> = {},
): QueueView {
  return {
    session_id: "rev-1",
    round: 0,
    epsilon: 16,
    items,
    pending: items.filter((i) => i.status === "pending").length,
    terminal: false,
    ...over,
  };
}
