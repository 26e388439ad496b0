// Browser entry point. Everything interesting lives in the pure
// modules; this file only reads the query string, owns the root node,
// and forwards DOM events to the controller.

import { ApiClient } from "./api.js";
import { Controller } from "./controller.js";
import { renderApp } from "./render.js";
import { initialState } from "./state.js";
import type { Decision } from "./types.js";

function query(name: string): string | null {
  return new URLSearchParams(window.location.search).get(name);
}

function main(): void {
  const root = document.getElementById("app");
  if (!root) return;

  const sessionId = query("session");
  if (!sessionId) {
    root.innerHTML = `<form class="picker">
      <label>session id <input name="session" autofocus></label>
      <button>open</button>
    </form>`;
    return;
  }

  const api = new ApiClient(query("api") ?? "", undefined, query("token"));
  const controller = new Controller(api, sessionId, initialState(), (state) => {
    root.innerHTML = renderApp(state);
  });

  function refOf(el: Element): string | null {
    return el.getAttribute("data-ref");
  }

  function fieldValue(field: string, ref: string): string {
    const el = root!.querySelector(
      `[data-field="${field}"][data-ref="${CSS.escape(ref)}"]`);
    return el instanceof HTMLInputElement || el instanceof HTMLSelectElement
      ? el.value
      : "";
  }

  root.addEventListener("click", (ev) => {
    const target = ev.target;
    if (!(target instanceof Element)) return;
    const button = target.closest("[data-action]");
    if (!button) return;
    const action = button.getAttribute("data-action");
    const ref = refOf(button);
    if (action === "dismiss-notice") {
      controller.clearNotice();
    } else if (action === "advance") {
      void controller.advance();
    } else if (ref && action === "toggle") {
      controller.toggleExpand(ref);
    } else if (ref && action === "known") {
      const label = fieldValue("known", ref);
      if (label) {
        void controller.submitDecision(ref, { kind: "known", label });
      }
    } else if (ref && action === "new") {
      const label = fieldValue("new", ref).trim();
      void controller.submitDecision(ref, { kind: "new", label });
    } else if (ref && action === "dismiss") {
      void controller.submitDecision(ref, { kind: "dismissed", label: null });
    }
  });

  // Keep typed new-label text across re-renders.
  root.addEventListener("input", (ev) => {
    const target = ev.target;
    if (!(target instanceof HTMLInputElement)) return;
    if (target.getAttribute("data-field") !== "new") return;
    const ref = refOf(target);
    if (!ref) return;
    const decision: Decision = { kind: "new", label: target.value };
    controller.setDraft(ref, decision);
  });

  controller.loadAll().catch((err) => {
    root.innerHTML = `<div class="notice">could not load session: ${
      String(err).replace(/&/g, "&amp;").replace(/</g, "&lt;")}</div>`;
  });
}

main();
