/** Whole-stack run: boots the real service, mounts the UI in jsdom, and
 * plays the phishing walkthrough by clicking rendered option buttons.
 */

import { ChildProcess, spawn } from "node:child_process";
import { readFileSync } from "node:fs";
import { resolve } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { ApiClient } from "../src/api.js";
import { GameController } from "../src/game.js";
import { mountApp } from "../src/view.js";

const PORT = 18930 + (process.pid % 500);
const BASE = `http://127.0.0.1:${PORT}`;

const DESCRIPTION = "I received an email asking me to verify my account.";
// The user's scripted choices; anything the engine asks beyond these gets
// the phishing row's reference answer from the packaged knowledge base.
const SCRIPT: Record<string, string> = {
  "av-03": "a",
  "av-04": "a",
  "av-24": "yes",
  "av-25": "yes",
  "av-26": "yes",
  "av-27": "no",
  "av-28": "no",
  "av-29": "yes",
};
const QUESTION_BUDGET = 8;

function phishingReferenceAnswers(): Record<string, string> {
  // vitest runs with the frontend directory as cwd; the KB ships next door
  const kbPath = resolve(process.cwd(), "..", "src", "eq20", "data", "starter_kb.json");
  const doc = JSON.parse(readFileSync(kbPath, "utf-8")) as {
    cells: { concept: string; question: string; reference: string[] }[];
  };
  const answers: Record<string, string> = {};
  for (const cell of doc.cells) {
    if (cell.concept === "phishing") answers[cell.question] = cell.reference[0];
  }
  return answers;
}

async function until(check: () => boolean, what: string, timeoutMs = 10000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (check()) return;
    await new Promise((resolve) => setTimeout(resolve, 15));
  }
  throw new Error(`timed out waiting for ${what}`);
}

let service: ChildProcess;

beforeAll(async () => {
  service = spawn("eq20", ["serve", "--port", String(PORT)], { stdio: "ignore" });
  const deadline = Date.now() + 20000;
  for (;;) {
    try {
      const probe = await fetch(`${BASE}/api/v1/kb/categories`);
      if (probe.ok) break;
    } catch {
      // still starting
    }
    if (Date.now() > deadline) throw new Error("service did not come up");
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
});

afterAll(() => {
  service?.kill();
});

describe("phishing walkthrough", () => {
  it("reaches the verdict screen with the explanation and pivotal highlight", async () => {
    document.body.innerHTML = "<main id='app'></main>";
    const root = document.getElementById("app")!;
    const api = new ApiClient(BASE);
    const controller = new GameController(api);
    const [categories, concepts] = await Promise.all([api.getCategories(), api.getConcepts()]);
    const unbind = mountApp(root, controller, {
      categories: categories.categories,
      conceptNames: new Map(concepts.concepts.map((c) => [c.id, c.name])),
    });
    const references = phishingReferenceAnswers();

    const description = root.querySelector<HTMLTextAreaElement>("textarea.description")!;
    description.value = DESCRIPTION;
    description.dispatchEvent(new Event("input", { bubbles: true }));
    const category = root.querySelector<HTMLSelectElement>("select.category")!;
    category.value = "attack-vectors";
    category.dispatchEvent(new Event("change", { bubbles: true }));
    root.querySelector<HTMLButtonElement>("button.primary")!.click();
    await until(() => controller.state.screen === "question", "the first question");

    let turns = 0;
    while (controller.state.screen === "question") {
      expect(turns).toBeLessThan(QUESTION_BUDGET);
      const question = controller.state.question!;
      const optionId = SCRIPT[question.id] ?? references[question.id];
      expect(optionId, `an answer for ${question.id}`).toBeDefined();
      const seen = turns;
      root.querySelector<HTMLButtonElement>(`button.option[data-option-id="${optionId}"]`)!.click();
      await until(
        () => controller.state.screen === "verdict" || controller.state.transcript.length > seen,
        `a reply to ${question.id}`,
      );
      turns += 1;
    }

    expect(controller.state.screen).toBe("verdict");
    expect(root.querySelector(".verdict-name")?.textContent).toBe("Phishing");

    const explanation = root.querySelector(".explanation")?.textContent ?? "";
    expect(explanation).toContain("the most likely threat is Phishing");
    expect(explanation).toContain(
      "Phishing is a social engineering attack in which adversaries convince users to reveal sensitive data.",
    );

    // highlighted row == the displayed table's own max-jump row
    const rows = [...root.querySelectorAll(".jump-table tr:not(:first-child)")];
    expect(rows.length).toBe(turns);
    const jumps = rows.map((row) => Number(row.querySelector(".trace-jump")!.textContent));
    const maxJump = Math.max(...jumps);
    const highlighted = rows.findIndex((row) => row.classList.contains("pivotal"));
    expect(highlighted).toBeGreaterThanOrEqual(0);
    expect(rows.filter((row) => row.classList.contains("pivotal")).length).toBe(1);
    expect(jumps[highlighted]).toBe(maxJump);

    // and it matches the server's trace, not a client-side recomputation
    const serverTrace = controller.state.result!.trace;
    expect(serverTrace.length).toBe(turns);
    let serverMax = 0;
    for (let i = 1; i < serverTrace.length; i++) {
      if (serverTrace[i].jump > serverTrace[serverMax].jump) serverMax = i;
    }
    expect(highlighted).toBe(serverMax);
    unbind();
  });

  it("resyncs an out-of-order answer from the session snapshot", async () => {
    document.body.innerHTML = "<main id='app'></main>";
    const root = document.getElementById("app")!;
    const api = new ApiClient(BASE);
    const controller = new GameController(api);
    const [categories, concepts] = await Promise.all([api.getCategories(), api.getConcepts()]);
    const unbind = mountApp(root, controller, {
      categories: categories.categories,
      conceptNames: new Map(concepts.concepts.map((c) => [c.id, c.name])),
    });

    root.querySelector<HTMLButtonElement>("button.primary")!.click();
    await until(() => controller.state.screen === "question", "the first question");
    const served = controller.state.question!.id;

    // sabotage the view with a question the server is not waiting on
    controller.state = {
      ...controller.state,
      question: { id: "av-99", text: "stale?", options: [{ id: "a", text: "Yes" }] },
    };
    await controller.choose("a");

    expect(controller.state.screen).toBe("question");
    expect(controller.state.question!.id).toBe(served);
    expect(root.querySelector(".question-text")?.textContent).toBe(controller.state.question!.text);
    unbind();
  });
});
