/** DOM rendering. Everything shown is a straight projection of API
 * payloads via rowView(); this module adds no numbers of its own. */

import { diffWords } from "./diff.js";
import {
  QueueState,
  progress,
  releaseEnabled,
  rowView,
  visibleItems,
} from "./state.js";

export interface ViewHooks {
  onLabel: (itemId: string, label: "hallucination" | "creative" | "correct") => void;
  onEdit: (itemId: string) => void;
  onRelease: () => void;
  onFilter: (filter: string) => void;
}

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function render(root: HTMLElement, state: QueueState, hooks: ViewHooks): void {
  root.textContent = "";
  const { total, remaining, done } = progress(state);

  const header = el("header");
  header.append(
    el("h1", "title", `curation queue — run ${state.runId}`),
    el("span", "state-badge", state.runState || "loading"),
    el("span", "progress", `${done}/${total} labeled, ${remaining} remaining`),
  );

  const filter = el("select", "filter") as HTMLSelectElement;
  for (const opt of ["all", "flagged", "unreviewed", "labeled"]) {
    const o = el("option", undefined, opt) as HTMLOptionElement;
    o.value = opt;
    filter.append(o);
  }
  filter.value = state.filter;
  filter.onchange = () => hooks.onFilter(filter.value);
  header.append(filter);

  const release = el("button", "release", "release stage-2") as HTMLButtonElement;
  release.disabled = !releaseEnabled(state);
  release.onclick = () => hooks.onRelease();
  header.append(release);
  root.append(header);

  if (state.lastError) {
    root.append(el("div", "error-banner", state.lastError));
  }

  const items = visibleItems(state);
  if (items.length === 0) {
    const empty = el("div", "empty",
      total === 0 || remaining === 0
        ? "curation complete — release when ready"
        : "no items match this filter");
    root.append(empty);
  }

  const list = el("ol", "queue");
  items.forEach((item, index) => {
    const row = rowView(item);
    const li = el("li", index === state.cursor ? "row selected" : "row");
    li.dataset["itemId"] = row.itemId;

    const sentence = el("div", "sentence", row.sentence);
    const context = el("div", "context", row.context);
    const meta = el(
      "div",
      "meta",
      `asls ${row.asls} · ce ${row.ce} · entities ${row.entities} · ` +
        `relations ${row.relations} · flag ${row.machineFlag}`,
    );
    const label = el("span", `label label-${row.label}`, row.label + (row.edited ? " (edited)" : ""));

    const buttons = el("div", "buttons");
    for (const [key, value] of [
      ["h", "hallucination"],
      ["c", "creative"],
      ["k", "correct"],
    ] as const) {
      const btn = el("button", undefined, `${value} (${key})`) as HTMLButtonElement;
      btn.onclick = () => hooks.onLabel(row.itemId, value);
      buttons.append(btn);
    }
    const edit = el("button", undefined, "edit (e)") as HTMLButtonElement;
    edit.onclick = () => hooks.onEdit(row.itemId);
    buttons.append(edit);

    li.append(label, sentence, context, meta, buttons);
    list.append(li);
  });
  root.append(list);
}

/** Modal editor showing a word diff of the repair against the original. */
export function renderEditor(
  root: HTMLElement,
  original: string,
  current: string,
  onSave: (text: string) => void,
  onCancel: () => void,
): void {
  root.textContent = "";
  const overlay = el("div", "editor-overlay");
  const box = el("div", "editor");
  box.append(el("h2", undefined, "repair completion"));

  const diffBox = el("div", "diff");
  const textarea = el("textarea") as HTMLTextAreaElement;
  textarea.value = current;
  const renderDiff = () => {
    diffBox.textContent = "";
    for (const op of diffWords(original, textarea.value)) {
      diffBox.append(el("span", `diff-${op.kind}`, op.text + " "));
    }
  };
  textarea.oninput = renderDiff;
  renderDiff();

  const save = el("button", undefined, "save repair") as HTMLButtonElement;
  save.onclick = () => onSave(textarea.value);
  const cancel = el("button", undefined, "cancel") as HTMLButtonElement;
  cancel.onclick = onCancel;

  box.append(el("h3", undefined, "diff vs original"), diffBox, textarea, save, cancel);
  overlay.append(box);
  root.append(overlay);
}
