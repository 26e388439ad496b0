// Server payload shapes, mirrored from the review service. The UI never
// invents fields; everything renders straight off these documents.

export interface SessionCounts {
  corpus: number;
  clusters: number;
  pending: number;
  reviewed: number;
}

export interface SessionSummary {
  session_id: string;
  round: number;
  epsilon: number;
  label_set: string[];
  new_labels_this_round: string[];
  counts: SessionCounts;
  terminal: boolean;
  terminal_reason: string | null;
}

export interface ActionParamDoc {
  asset: string;
  amount: string;
  dir: "in" | "out";
  counterparty?: string;
}

export interface ActionDoc {
  contract: string;
  type: string;
  params: ActionParamDoc[];
  token_id?: number;
}

export interface TransactionDoc {
  hash: string;
  sender: string | null;
  recipient: string | null;
  actions: ActionDoc[];
}

export interface FindingDoc {
  block: number;
  bundle_index: number;
  activity: string;
  activity_name: string;
  witness: { txs: number[]; contracts: string[]; assets: string[] };
  profit?: string;
  profit_asset?: string;
}

export interface QueueItem {
  ref: string;
  cluster: number;
  cluster_size: number;
  status: "pending" | "labeled" | "dismissed";
  label: string | null;
  // Present when the bundle store still holds the bundle.
  block_number?: number;
  bundle_index?: number;
  coinbase?: string;
  transactions?: TransactionDoc[];
  findings?: FindingDoc[];
}

export interface QueueView {
  session_id: string;
  round: number;
  epsilon: number;
  items: QueueItem[];
  pending: number;
  terminal: boolean;
}

export type DecisionKind = "known" | "new" | "dismissed";

export interface Decision {
  kind: DecisionKind;
  label: string | null;
}
