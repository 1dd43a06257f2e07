// Typed client for the study service. All requests/responses are the
// schema-versioned JSON the service speaks; nothing here is UI-specific, so
// headless drivers and tests use the same client as the browser.

export interface StudyItem {
  triplet_id: string;
  source_url: string;
  edited_url: string;
  prompt: string;
  index: number;
}

export interface SessionInfo {
  schema_version: string;
  session_id: string;
  study_id: string;
  annotator_id: string;
  cursor: number;
  total: number;
  complete: boolean;
  status: string;
  instructions?: string;
}

export interface NextItemResponse extends SessionInfo {
  done: boolean;
  item: StudyItem | null;
}

export interface RatingAck {
  schema_version: string;
  accepted: boolean;
  duplicate: boolean;
  cursor: number;
  complete: boolean;
}

export interface ServiceErrorBody {
  schema_version: string;
  error: { code: string; message: string };
}

export class ServiceError extends Error {
  constructor(public status: number, public code: string, message: string) {
    super(message);
  }
}

async function parseError(response: Response): Promise<ServiceError> {
  let code = "unknown";
  let message = `HTTP ${response.status}`;
  try {
    const body = (await response.json()) as ServiceErrorBody;
    if (body.error) {
      code = body.error.code;
      message = body.error.message;
    }
  } catch {
    // non-JSON error body; keep the generic message
  }
  return new ServiceError(response.status, code, message);
}

export class StudyApiClient {
  constructor(
    private baseUrl: string,
    private fetchFn: typeof fetch = fetch,
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  enroll(studyId: string, annotatorId: string): Promise<SessionInfo> {
    return this.request<SessionInfo>("POST", `/studies/${studyId}/enroll`, {
      annotator_id: annotatorId,
    });
  }

  sessionInfo(sessionId: string): Promise<SessionInfo> {
    return this.request<SessionInfo>("GET", `/sessions/${sessionId}`);
  }

  nextItem(sessionId: string): Promise<NextItemResponse> {
    return this.request<NextItemResponse>("GET", `/sessions/${sessionId}/next`);
  }

  // Submission retries on network failure; the service treats a retry of the
  // last committed (triplet, score) pair as an idempotent duplicate, so this
  // can never double-record a rating.
  async submitRating(
    sessionId: string,
    tripletId: string,
    score: number,
    attempts = 3,
  ): Promise<RatingAck> {
    let lastError: unknown;
    for (let attempt = 0; attempt < attempts; attempt++) {
      try {
        return await this.request<RatingAck>("POST", `/sessions/${sessionId}/ratings`, {
          triplet_id: tripletId,
          score,
        });
      } catch (error) {
        if (error instanceof ServiceError) {
          throw error; // the service answered; retrying cannot help
        }
        lastError = error; // network-level failure: retry idempotently
      }
    }
    throw lastError;
  }

  mediaUrl(path: string): string {
    return path.startsWith("http") ? path : `${this.baseUrl}${path}`;
  }
}
