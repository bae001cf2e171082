/** Bootstrap: pick a run (?run=<id> or a picker over /v1/runs), wire the
 * controller, keyboard shortcuts, and renderer together. */

import { ApiClient } from "./api.js";
import { QueueController } from "./controller.js";
import { handleKey } from "./keyboard.js";
import { selected } from "./state.js";
import { render, renderEditor } from "./view.js";

const api = new ApiClient("");

async function pickRun(root: HTMLElement): Promise<string> {
  const fromUrl = new URLSearchParams(location.search).get("run");
  if (fromUrl) return fromUrl;
  const { runs } = await api.listRuns();
  return await new Promise((resolve) => {
    root.textContent = "";
    const h = document.createElement("h1");
    h.textContent = "pick a run";
    root.append(h);
    const ul = document.createElement("ul");
    for (const run of runs) {
      const li = document.createElement("li");
      const a = document.createElement("a");
      a.href = `?run=${run.run_id}`;
      a.textContent = `${run.run_id} — ${run.state} (${run.remaining_unreviewed} unreviewed)`;
      a.onclick = (e) => {
        e.preventDefault();
        history.pushState({}, "", a.href);
        resolve(run.run_id);
      };
      li.append(a);
      ul.append(li);
    }
    root.append(ul);
  });
}

async function start(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) return;
  const runId = await pickRun(root);
  const controller = new QueueController(api, runId);
  const editorRoot = document.createElement("div");
  document.body.append(editorRoot);

  const hooks = {
    onLabel: (itemId: string, label: "hallucination" | "creative" | "correct") =>
      void controller.label(itemId, label),
    onEdit: (itemId: string) => openEditor(itemId),
    onRelease: () => void controller.release(),
    onFilter: (filter: string) =>
      controller.update((s) => ({ ...s, filter: filter as never, cursor: 0 })),
  };

  function openEditor(itemId?: string): void {
    const item = itemId
      ? controller.getState().items.find((i) => i.item_id === itemId)
      : selected(controller.getState());
    if (!item) return;
    renderEditor(
      editorRoot,
      item.completion_context,
      item.edited_completion ?? item.completion_context,
      (text) => {
        editorRoot.textContent = "";
        void controller.label(item.item_id, "hallucination", text);
      },
      () => {
        editorRoot.textContent = "";
      },
    );
  }

  controller.subscribe((state) => render(root, state, hooks));
  document.addEventListener("keydown", (event) => {
    if (event.target instanceof HTMLTextAreaElement) return;
    if (
      handleKey(event.key, {
        controller,
        openEditor: () => openEditor(),
        release: () => void controller.release(),
      })
    ) {
      event.preventDefault();
    }
  });

  await controller.refresh();
}

void start();
