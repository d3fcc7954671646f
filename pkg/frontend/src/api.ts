/** Typed client for the eq20 session service.
 *
 * Every number shown in the UI comes out of these response shapes verbatim;
 * the client never derives probabilities of its own.
 */

export interface OptionView {
  id: string;
  text: string;
}

export interface QuestionView {
  id: string;
  text: string;
  options: OptionView[];
}

/** One bar of the belief chart, already ranked by the server. */
export interface BeliefEntry {
  concept: string;
  prob: number;
}

/** One row of the per-turn jump table. */
export interface TraceRow {
  question: string;
  answer: string;
  jump: number;
}

export interface ResultView {
  concept: string;
  name: string;
  confidence: number;
  status: "identified" | "exhausted";
  explanation: string;
  trace: TraceRow[];
}

export interface StartResponse {
  session_id: string;
  question: QuestionView;
  belief_top: BeliefEntry[];
}

/** POST /answers: either the next question or the final result. */
export interface AnswerResponse {
  question?: QuestionView;
  belief_top?: BeliefEntry[];
  result?: ResultView;
}

export interface SnapshotResponse {
  session_id: string;
  category: string;
  status: string;
  turn: number;
  belief_top: BeliefEntry[];
  question?: QuestionView;
  result?: ResultView;
}

export interface CategoryView {
  id: string;
  name: string;
  concepts: number;
  questions: number;
}

export interface ConceptView {
  id: string;
  name: string;
  category: string;
  description: string;
}

const PREFIX = "/api/v1";

/** Non-2xx response carrying the service's machine-readable code. */
export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "content-type": "application/json" } };
    if (body !== undefined) init.body = JSON.stringify(body);
    const response = await fetch(this.base + PREFIX + path, init);
    const payload = await response.json().catch(() => null);
    if (!response.ok) {
      const err = payload && typeof payload === "object" ? (payload as { error?: { code?: string; message?: string } }).error : undefined;
      throw new ApiError(err?.code ?? "VALIDATION", err?.message ?? response.statusText, response.status);
    }
    return payload as T;
  }

  startSession(description: string, category?: string, policy?: string): Promise<StartResponse> {
    const body: Record<string, string> = { description };
    if (category) body.category = category;
    if (policy) body.policy = policy;
    return this.request<StartResponse>("POST", "/sessions", body);
  }

  submitAnswer(sessionId: string, questionId: string, optionIds: string[]): Promise<AnswerResponse> {
    return this.request<AnswerResponse>("POST", `/sessions/${sessionId}/answers`, {
      question_id: questionId,
      option_ids: optionIds,
    });
  }

  getSession(sessionId: string): Promise<SnapshotResponse> {
    return this.request<SnapshotResponse>("GET", `/sessions/${sessionId}`);
  }

  getExplanation(sessionId: string): Promise<{ result: ResultView }> {
    return this.request<{ result: ResultView }>("GET", `/sessions/${sessionId}/explanation`);
  }

  getCategories(): Promise<{ categories: CategoryView[] }> {
    return this.request<{ categories: CategoryView[] }>("GET", "/kb/categories");
  }

  getConcepts(): Promise<{ concepts: ConceptView[] }> {
    return this.request<{ concepts: ConceptView[] }>("GET", "/kb/concepts");
  }
}
