/** DOM bootstrap: wires the pure state machine and renderer to the page. */

import { askQuestion } from "./api.js";
import { renderApp } from "./render.js";
import { initialState, submitQuestion, toggleContext } from "./state.js";
import type { SessionState } from "./types.js";

function mount(root: HTMLElement): void {
  let state: SessionState = initialState();
  let draft = "";

  function redraw(next: SessionState): void {
    state = next;
    root.innerHTML = renderApp(state);
    const input = root.querySelector<HTMLInputElement>('input[name="question"]');
    if (input) {
      input.value = draft;
      if (state.status !== "pending") {
        input.focus();
      }
    }
  }

  async function ask(text: string): Promise<void> {
    await submitQuestion(state, text, askQuestion, (next) => {
      if (next.status !== "pending") {
        draft = "";
      }
      redraw(next);
    });
  }

  root.addEventListener("submit", (event) => {
    event.preventDefault();
    const input = root.querySelector<HTMLInputElement>('input[name="question"]');
    if (input) {
      draft = input.value;
      void ask(input.value);
    }
  });

  root.addEventListener("input", (event) => {
    const target = event.target as HTMLInputElement;
    if (target.name === "question") {
      draft = target.value;
    }
  });

  root.addEventListener("click", (event) => {
    const target = (event.target as HTMLElement).closest<HTMLElement>("[data-action]");
    if (!target) {
      return;
    }
    if (target.dataset.action === "toggle") {
      redraw(toggleContext(state, Number(target.dataset.turn)));
    } else if (target.dataset.action === "retry" && state.lastFailedQuestion) {
      void ask(state.lastFailedQuestion);
    }
  });

  redraw(state);
}

const root = document.getElementById("app");
if (root) {
  mount(root);
}
