import {
  ApiClient,
  ApiError,
  BeliefEntry,
  QuestionView,
  ResultView,
  TraceRow,
} from "./api.js";

export type Screen = "start" | "question" | "verdict";

/** Locally kept record of one asked-and-answered turn. */
export interface TranscriptEntry {
  question: string;
  answer: string;
}

export interface GameState {
  screen: Screen;
  sessionId: string | null;
  question: QuestionView | null;
  belief: BeliefEntry[];
  transcript: TranscriptEntry[];
  result: ResultView | null;
  busy: boolean;
  error: string | null;
  offline: boolean;
}

/** Index of the row the verdict table highlights: the biggest jump,
 * earliest row on exact ties, matching the server's pivotal choice. */
export function pivotalIndex(trace: TraceRow[]): number {
  let best = 0;
  for (let i = 1; i < trace.length; i++) {
    if (trace[i].jump > trace[best].jump) best = i;
  }
  return best;
}

type Listener = (state: GameState) => void;

/** Drives one game against the service.
 *
 * All server traffic is sequential: the busy flag drops every interaction
 * while a request is in flight, and a question id that has been submitted
 * is never posted again unless a snapshot shows the server still waiting
 * on it (so at most one answer per question reaches the server).
 */
export class GameController {
  state: GameState = freshState();
  private submitted = new Set<string>();
  private listeners: Listener[] = [];

  constructor(private readonly api: ApiClient) {}

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  private patch(changes: Partial<GameState>): void {
    this.state = { ...this.state, ...changes };
    this.notify();
  }

  reset(): void {
    this.submitted = new Set();
    this.state = freshState();
    this.notify();
  }

  async start(description: string, category?: string): Promise<void> {
    if (this.state.busy || this.state.screen !== "start") return;
    this.patch({ busy: true, error: null, offline: false });
    try {
      const started = await this.api.startSession(description, category);
      this.patch({
        busy: false,
        screen: "question",
        sessionId: started.session_id,
        question: started.question,
        belief: started.belief_top,
      });
    } catch (err) {
      if (err instanceof ApiError) {
        this.patch({ busy: false, error: err.message });
      } else {
        this.patch({ busy: false, offline: true });
      }
    }
  }

  async choose(optionId: string): Promise<void> {
    const question = this.state.question;
    if (this.state.busy || this.state.screen !== "question" || !question) return;
    if (this.submitted.has(question.id)) return;
    this.submitted.add(question.id);
    this.patch({ busy: true, error: null });
    const answered: TranscriptEntry = {
      question: question.text,
      answer: question.options.find((o) => o.id === optionId)?.text ?? optionId,
    };
    try {
      const reply = await this.api.submitAnswer(this.state.sessionId!, question.id, [optionId]);
      const transcript = [...this.state.transcript, answered];
      if (reply.result) {
        this.patch({ busy: false, transcript, result: reply.result, question: null, screen: "verdict" });
      } else {
        this.patch({ busy: false, transcript, question: reply.question!, belief: reply.belief_top! });
      }
    } catch (err) {
      if (err instanceof ApiError && (err.code === "OUT_OF_ORDER" || err.code === "SESSION_CLOSED")) {
        // The view drifted from the server (stale question, duplicate tab);
        // the snapshot is the authority on where the game actually is.
        this.patch({ busy: false });
        await this.resync();
      } else if (err instanceof ApiError) {
        this.patch({ busy: false, error: err.message });
      } else {
        // The request may or may not have landed; never repost blindly.
        this.patch({ busy: false, offline: true });
      }
    }
  }

  /** Restore the view from GET /sessions/{id} after a drop or conflict. */
  async resync(): Promise<void> {
    const sessionId = this.state.sessionId;
    if (!sessionId || this.state.busy) return;
    this.patch({ busy: true });
    try {
      const snapshot = await this.api.getSession(sessionId);
      if (snapshot.question) {
        // Still open: the server never saw an answer for this question,
        // so submitting it (again) is allowed.
        this.submitted.delete(snapshot.question.id);
        this.patch({
          busy: false,
          offline: false,
          error: null,
          screen: "question",
          question: snapshot.question,
          belief: snapshot.belief_top,
        });
      } else {
        this.patch({
          busy: false,
          offline: false,
          error: null,
          screen: "verdict",
          question: null,
          result: snapshot.result!,
          belief: snapshot.belief_top,
        });
      }
    } catch (err) {
      if (err instanceof ApiError) {
        this.patch({ busy: false, offline: false, error: err.message });
      } else {
        this.patch({ busy: false, offline: true });
      }
    }
  }

  /** Retry banner action: resync a live session, clear the flag otherwise. */
  async retry(): Promise<void> {
    if (this.state.sessionId) {
      await this.resync();
    } else {
      this.patch({ offline: false });
    }
  }
}

function freshState(): GameState {
  return {
    screen: "start",
    sessionId: null,
    question: null,
    belief: [],
    transcript: [],
    result: null,
    busy: false,
    error: null,
    offline: false,
  };
}
