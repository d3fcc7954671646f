/** DOM rendering for the three screens: describe, answer, verdict.
 *
 * Rendering is a full rebuild per state change. Every probability and jump
 * on screen is a formatted copy of a server response field.
 */

import { BeliefEntry, CategoryView, QuestionView, TraceRow } from "./api.js";
import { GameController, GameState, pivotalIndex } from "./game.js";

export interface KbMeta {
  categories: CategoryView[];
  conceptNames: Map<string, string>;
}

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function optionLetter(index: number): string {
  return String.fromCharCode(65 + index);
}

export function beliefChart(belief: BeliefEntry[], names: Map<string, string>): HTMLElement {
  const chart = el("div", "belief-chart");
  chart.appendChild(el("h3", "belief-title", "Current belief"));
  for (const entry of belief) {
    const row = el("div", "belief-row");
    row.appendChild(el("span", "belief-label", names.get(entry.concept) ?? entry.concept));
    const track = el("div", "belief-track");
    const bar = el("div", "belief-bar");
    bar.style.width = `${entry.prob * 100}%`;
    bar.dataset.prob = String(entry.prob);
    track.appendChild(bar);
    row.appendChild(track);
    row.appendChild(el("span", "belief-percent", `${(entry.prob * 100).toFixed(1)}%`));
    chart.appendChild(row);
  }
  return chart;
}

export function questionCard(question: QuestionView, onChoose: (optionId: string) => void): HTMLElement {
  const card = el("div", "question-card");
  card.appendChild(el("h2", "question-text", question.text));
  const list = el("div", "options");
  question.options.forEach((option, index) => {
    const button = el("button", "option") as HTMLButtonElement;
    button.type = "button";
    button.dataset.optionId = option.id;
    button.appendChild(el("span", "option-letter", optionLetter(index)));
    button.appendChild(el("span", "option-text", option.text));
    button.addEventListener("click", () => onChoose(option.id));
    list.appendChild(button);
  });
  card.appendChild(list);
  card.appendChild(el("p", "hint", "Click an option, or press its letter or number key."));
  return card;
}

export function jumpTable(trace: TraceRow[]): HTMLElement {
  const wrap = el("div", "trace");
  wrap.appendChild(el("h3", undefined, "How each answer moved the verdict"));
  const table = el("table", "jump-table");
  const head = el("tr");
  for (const label of ["#", "Question", "Your answer", "Jump"]) {
    head.appendChild(el("th", undefined, label));
  }
  table.appendChild(head);
  const pivotal = trace.length > 0 ? pivotalIndex(trace) : -1;
  trace.forEach((row, index) => {
    const tr = el("tr", index === pivotal ? "pivotal" : undefined);
    tr.appendChild(el("td", undefined, String(index + 1)));
    tr.appendChild(el("td", "trace-question", row.question));
    tr.appendChild(el("td", undefined, row.answer));
    const jump = `${row.jump >= 0 ? "+" : ""}${row.jump.toFixed(4)}`;
    tr.appendChild(el("td", "trace-jump", jump));
    table.appendChild(tr);
  });
  wrap.appendChild(table);
  return wrap;
}

function offlineBanner(controller: GameController): HTMLElement {
  const banner = el("div", "banner banner-offline");
  banner.appendChild(el("span", undefined, "The service did not respond."));
  const retry = el("button", "retry") as HTMLButtonElement;
  retry.type = "button";
  retry.textContent = "Retry";
  retry.addEventListener("click", () => void controller.retry());
  banner.appendChild(retry);
  return banner;
}

interface StartDraft {
  description: string;
  category: string;
}

function startScreen(state: GameState, meta: KbMeta, draft: StartDraft, controller: GameController): HTMLElement {
  const screen = el("div", "screen screen-start");
  screen.appendChild(el("h1", undefined, "What happened?"));
  screen.appendChild(
    el("p", "lead", "Describe the incident in your own words, then answer a few questions to narrow down the threat."),
  );
  if (state.offline) screen.appendChild(offlineBanner(controller));
  if (state.error) screen.appendChild(el("div", "banner banner-error", state.error));

  const description = el("textarea", "description") as HTMLTextAreaElement;
  description.placeholder = "e.g. I received an email asking me to verify my account.";
  description.value = draft.description;
  description.addEventListener("input", () => {
    draft.description = description.value;
  });
  screen.appendChild(description);

  const row = el("div", "start-row");
  const select = el("select", "category") as HTMLSelectElement;
  for (const category of meta.categories) {
    const option = document.createElement("option");
    option.value = category.id;
    option.textContent = `${category.name} (${category.concepts} concepts)`;
    select.appendChild(option);
  }
  if (draft.category) select.value = draft.category;
  select.addEventListener("change", () => {
    draft.category = select.value;
  });
  row.appendChild(select);

  const start = el("button", "primary") as HTMLButtonElement;
  start.type = "button";
  start.textContent = state.busy ? "Starting…" : "Start";
  start.disabled = state.busy;
  start.addEventListener("click", () => void controller.start(draft.description, draft.category || undefined));
  row.appendChild(start);
  screen.appendChild(row);
  return screen;
}

function questionScreen(state: GameState, meta: KbMeta, controller: GameController): HTMLElement {
  const screen = el("div", "screen screen-question");
  if (state.offline) screen.appendChild(offlineBanner(controller));
  if (state.error) screen.appendChild(el("div", "banner banner-error", state.error));
  screen.appendChild(el("div", "turn-label", `Question ${state.transcript.length + 1} of 20`));
  if (state.question) {
    screen.appendChild(questionCard(state.question, (optionId) => void controller.choose(optionId)));
  }
  screen.appendChild(beliefChart(state.belief, meta.conceptNames));
  if (state.transcript.length > 0) {
    const log = el("div", "transcript");
    log.appendChild(el("h3", undefined, "So far"));
    for (const entry of state.transcript) {
      const line = el("div", "transcript-entry");
      line.appendChild(el("span", "transcript-question", entry.question));
      line.appendChild(el("span", "transcript-answer", entry.answer));
      log.appendChild(line);
    }
    screen.appendChild(log);
  }
  return screen;
}

function verdictScreen(state: GameState, controller: GameController): HTMLElement {
  const screen = el("div", "screen screen-verdict");
  const result = state.result!;
  screen.appendChild(el("div", "verdict-label", "Most likely threat"));
  screen.appendChild(el("h1", "verdict-name", result.name));
  screen.appendChild(el("div", "confidence", `Confidence ${(result.confidence * 100).toFixed(1)}%`));
  if (result.status === "exhausted") {
    screen.appendChild(
      el("div", "banner banner-exhausted", "All 20 questions were used; this is the closest match."),
    );
  }
  screen.appendChild(el("p", "explanation", result.explanation));
  screen.appendChild(jumpTable(result.trace));
  const again = el("button", "primary") as HTMLButtonElement;
  again.type = "button";
  again.textContent = "New game";
  again.addEventListener("click", () => controller.reset());
  screen.appendChild(again);
  return screen;
}

export function renderApp(root: HTMLElement, state: GameState, meta: KbMeta, draft: StartDraft, controller: GameController): void {
  root.textContent = "";
  if (state.screen === "start") {
    root.appendChild(startScreen(state, meta, draft, controller));
  } else if (state.screen === "question") {
    root.appendChild(questionScreen(state, meta, controller));
  } else {
    root.appendChild(verdictScreen(state, controller));
  }
}

/** A/B/C letters and 1-9 digits answer the visible question. */
export function bindKeyboard(target: Document, controller: GameController): () => void {
  const handler = (event: KeyboardEvent) => {
    const state = controller.state;
    if (state.screen !== "question" || state.busy || !state.question) return;
    const key = event.key;
    let index = -1;
    if (/^[a-z]$/i.test(key)) index = key.toLowerCase().charCodeAt(0) - 97;
    else if (/^[1-9]$/.test(key)) index = Number(key) - 1;
    if (index >= 0 && index < state.question.options.length) {
      event.preventDefault();
      void controller.choose(state.question.options[index].id);
    }
  };
  target.addEventListener("keydown", handler);
  return () => target.removeEventListener("keydown", handler);
}

/** Wire controller, metadata, and keyboard onto a root element. */
export function mountApp(root: HTMLElement, controller: GameController, meta: KbMeta): () => void {
  const draft: StartDraft = { description: "", category: meta.categories[0]?.id ?? "" };
  controller.onChange((state) => renderApp(root, state, meta, draft, controller));
  renderApp(root, controller.state, meta, draft, controller);
  return bindKeyboard(root.ownerDocument, controller);
}
