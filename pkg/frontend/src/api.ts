/**
 * Typed client for the quiz-design REST API.
 *
 * Every mutation awaits the server; errors arrive as a uniform
 * `{error_code, message}` envelope and are rethrown as ApiError so the
 * view layer can render them without inspecting HTTP internals.
 */

export interface Topic {
  id: string;
  title: string;
  source_uri: string;
}

export interface Material {
  topic_id: string;
  text: string;
  word_count: number;
}

export interface TaxonomyLeaf {
  label: string;
  display_name: string;
}

export interface TaxonomyCategory {
  label: string;
  display_name: string;
  leaves: TaxonomyLeaf[];
}

export interface Concept {
  material_ref: string;
  char_start: number;
  char_end: number;
  answer_text: string;
  word_count: number;
}

/** The server never includes model identities here; only the shuffled
 * position and the text ever reach the client. */
export interface Candidate {
  presentation_index: number;
  text: string;
}

export interface ApiWarning {
  code: string;
  message: string;
}

export interface Batch {
  session_id: string;
  concept: Concept;
  shuffle_seed: number;
  candidates: Candidate[];
  excluded_count: number;
  warnings: ApiWarning[];
}

export interface Session {
  session_id: string;
  annotator_id: string;
  topic_id: string;
  state: string;
}

export interface JudgmentOutcome {
  sequence_no: number;
  state: string;
  judged_count: number;
}

export interface Reason {
  category: string;
  subtype: string;
}

export interface FinalizeOutcome {
  session_id: string;
  state: string;
  accepted_count: number;
  judged_count: number;
  accepted: { concept: Concept; question_text: string }[];
  warnings: ApiWarning[];
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly errorCode: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  const body = await response.json();
  if (!response.ok) {
    const code = typeof body.error_code === "string" ? body.error_code : "unknown";
    const message = typeof body.message === "string" ? body.message : response.statusText;
    throw new ApiError(response.status, code, message);
  }
  return body as T;
}

function post<T>(url: string, payload: unknown): Promise<T> {
  return request<T>(url, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(payload),
  });
}

export class QuizApi {
  constructor(private readonly baseUrl: string) {}

  listTopics(): Promise<{ topics: Topic[] }> {
    return request(`${this.baseUrl}/topics`);
  }

  material(topicId: string): Promise<Material> {
    return request(`${this.baseUrl}/topics/${encodeURIComponent(topicId)}/material`);
  }

  taxonomy(): Promise<{ categories: TaxonomyCategory[] }> {
    return request(`${this.baseUrl}/taxonomy`);
  }

  createSession(annotatorId: string, topicId: string): Promise<Session> {
    return post(`${this.baseUrl}/sessions`, {
      annotator_id: annotatorId,
      topic_id: topicId,
    });
  }

  confirmConcept(sessionId: string, charStart: number, charEnd: number): Promise<Batch> {
    return post(`${this.baseUrl}/sessions/${sessionId}/concepts`, {
      char_start: charStart,
      char_end: charEnd,
    });
  }

  judge(
    sessionId: string,
    presentationIndex: number,
    verdict: "Accept" | "Reject",
    reason?: Reason,
  ): Promise<JudgmentOutcome> {
    const payload: Record<string, unknown> = {
      presentation_index: presentationIndex,
      verdict,
    };
    if (reason) {
      payload.reason = reason;
    }
    return post(`${this.baseUrl}/sessions/${sessionId}/judgments`, payload);
  }

  finalize(sessionId: string): Promise<FinalizeOutcome> {
    return post(`${this.baseUrl}/sessions/${sessionId}/finalize`, {});
  }
}
