/** Keyboard-first triage: h/c/k assign labels, e opens the completion
 * editor, arrows (or n/p) move, r releases. */

import { QueueController } from "./controller.js";
import { moveCursor } from "./state.js";

export interface KeyDeps {
  controller: QueueController;
  openEditor: () => void;
  release: () => void;
}

export function handleKey(key: string, deps: KeyDeps): boolean {
  const { controller } = deps;
  switch (key) {
    case "h":
      void controller.labelSelected("hallucination");
      return true;
    case "c":
      void controller.labelSelected("creative");
      return true;
    case "k":
      void controller.labelSelected("correct");
      return true;
    case "e":
      deps.openEditor();
      return true;
    case "r":
      deps.release();
      return true;
    case "ArrowDown":
    case "n":
      controller.update((s) => moveCursor(s, 1));
      return true;
    case "ArrowUp":
    case "p":
      controller.update((s) => moveCursor(s, -1));
      return true;
    default:
      return false;
  }
}
