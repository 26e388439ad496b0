import { describe, expect, it } from "vitest";

import {
  groupItems, renderAdvanceBar, renderApp, renderItem, renderQueue,
} from "../src/render.js";
import { initialState, reduce, UiState } from "../src/state.js";
import { makeItem, makeQueue, makeSession } from "./fixtures.js";

function stateWith(queueItems = [makeItem("14200000/0")]): UiState {
  let s = reduce(initialState(), {
    type: "session-loaded",
    session: makeSession(),
  });
  s = reduce(s, { type: "queue-loaded", queue: makeQueue(queueItems) });
  return s;
}

describe("groupItems", () => {
  it("orders clusters by size descending with noise at the end", () => {
    const items = [
      makeItem("a", { cluster: -1, cluster_size: 1 }),
      makeItem("b", { cluster: 2, cluster_size: 2 }),
      makeItem("c", { cluster: 2, cluster_size: 2 }),
      makeItem("d", { cluster: 0, cluster_size: 3 }),
      makeItem("e", { cluster: 0, cluster_size: 3 }),
      makeItem("f", { cluster: 0, cluster_size: 3 }),
    ];
    const groups = groupItems(items);
    expect(groups.map((g) => g.cluster)).toEqual([0, 2, -1]);
    expect(groups[0]?.items.map((i) => i.ref)).toEqual(["d", "e", "f"]);
    expect(groups[2]?.items[0]?.ref).toBe("a");
  });

  it("keeps each noise point as its own group", () => {
    const items = [
      makeItem("a", { cluster: -1, cluster_size: 1 }),
      makeItem("b", { cluster: -1, cluster_size: 1 }),
    ];
    expect(groupItems(items)).toHaveLength(2);
  });
});

describe("renderQueue", () => {
  it("shows round complete when nothing is queued", () => {
    const s = stateWith([]);
    const html = renderQueue(s);
    expect(html).toContain("round complete");
    expect(renderAdvanceBar(s)).not.toContain("disabled");
  });

  it("renders cluster headings with sizes", () => {
    const s = stateWith([
      makeItem("x", { cluster: 3, cluster_size: 2 }),
      makeItem("y", { cluster: 3, cluster_size: 2 }),
    ]);
    const html = renderQueue(s);
    expect(html).toContain("cluster 3");
    expect(html).toContain("2 bundles");
  });
});

describe("renderItem", () => {
  it("gives a pending item live decision controls", () => {
    const s = stateWith();
    const html = renderItem(s, s.queue!.items[0]!);
    expect(html).toContain('data-action="known"');
    expect(html).toContain('data-action="new"');
    expect(html).toContain('data-action="dismiss"');
    expect(html).not.toContain("resolved");
  });

  it("marks labeled items resolved and drops the controls", () => {
    const item = makeItem("14200000/0", { status: "labeled", label: "SA" });
    const s = stateWith([item]);
    const html = renderItem(s, item);
    expect(html).toContain("resolved");
    expect(html).toContain("labeled: SA");
    expect(html).not.toContain('data-action="dismiss"');
  });

  it("treats a sent-but-not-refreshed item as resolved", () => {
    let s = stateWith();
    s = reduce(s, { type: "decision-started", ref: "14200000/0" });
    s = reduce(s, {
      type: "decision-ok",
      ref: "14200000/0",
      session: makeSession(),
    });
    const html = renderItem(s, s.queue!.items[0]!);
    expect(html).toContain("resolved");
  });

  it("shows detector findings with profit in scientific notation", () => {
    const s = stateWith();
    const html = renderItem(s, s.queue!.items[0]!);
    expect(html).toContain("RBA");
    expect(html).toContain("4.261e19");
    expect(html).toContain('title="42610000000000000000 ETH"');
  });

  it("expands to the action timeline with raw value tooltips", () => {
    let s = stateWith();
    s = reduce(s, { type: "toggle-expand", ref: "14200000/0" });
    const html = renderItem(s, s.queue!.items[0]!);
    expect(html).toContain("Swap");
    expect(html).toContain("5.001e13");
    expect(html).toContain('title="50018700000000');
    expect(html).toContain("1.408e10");
  });

  it("escapes hostile strings from the server", () => {
    const item = makeItem("14200000/0", {
      status: "labeled",
      label: `<script>alert(1)</script>`,
    });
    const s = stateWith([item]);
    const html = renderItem(s, item);
    expect(html).not.toContain("<script>");
    expect(html).toContain("&lt;script&gt;");
  });
});

describe("renderApp", () => {
  it("disables advance while items are pending", () => {
    const html = renderApp(stateWith());
    expect(html).toMatch(/data-action="advance" disabled/);
    expect(html).toContain("still pending");
  });

  it("highlights labels added this round", () => {
    let s = stateWith();
    s = reduce(s, {
      type: "session-loaded",
      session: makeSession({
        label_set: ["SA", "CA", "RB"],
        new_labels_this_round: ["RB"],
      }),
    });
    const html = renderApp(s);
    expect(html).toContain('class="chip chip-new">RB');
    expect(html).toContain('class="chip">SA');
  });

  it("shows the epsilon halving after an advance", () => {
    let s = stateWith([]);
    s = reduce(s, {
      type: "session-loaded",
      session: makeSession({ new_labels_this_round: ["RB"] }),
    });
    s = reduce(s, { type: "advance-started" });
    s = reduce(s, {
      type: "advance-ok",
      fromEpsilon: 16,
      session: makeSession({
        round: 1,
        epsilon: 8,
        label_set: ["SA", "CA", "RB"],
        new_labels_this_round: [],
        counts: { corpus: 3, clusters: 1, pending: 2, reviewed: 3 },
      }),
    });
    const html = renderApp(s);
    expect(html).toContain("16");
    expect(html).toContain("&rarr; 8");
    expect(html).toContain("corpus 3");
    expect(html).toContain("RB");
  });

  it("renders a terminal session read only", () => {
    let s = reduce(initialState(), {
      type: "session-loaded",
      session: makeSession({
        terminal: true,
        terminal_reason: "corpus-empty",
        counts: { corpus: 0, clusters: 0, pending: 0, reviewed: 6 },
      }),
    });
    s = reduce(s, { type: "queue-loaded", queue: makeQueue([], { terminal: true }) });
    const html = renderApp(s);
    expect(html).toContain("session finished");
    expect(html).toContain("corpus-empty");
    expect(html).not.toContain("data-action=\"advance\"");
    expect(html).not.toContain("data-action=\"dismiss\"");
  });

  it("surfaces the notice with a dismiss control", () => {
    let s = stateWith();
    s = reduce(s, {
      type: "decision-failed",
      ref: "14200000/0",
      detail: "boom",
    });
    const html = renderApp(s);
    expect(html).toContain("could not submit");
    expect(html).toContain('data-action="dismiss-notice"');
  });
});
