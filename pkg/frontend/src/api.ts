// JSON client for the difficulty service. This file is the only coupling to
// the backend: the three /v1 endpoints and their request/response shapes.

export interface Verdict {
  harder: number;
  confidence: number;
  cold_start_used: boolean;
}

export interface FeedbackResult {
  accepted: boolean;
}

export interface Health {
  status: string;
  questions: number;
  model_revision: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    detail: string,
  ) {
    super(detail);
  }
}

/** Question id from a raw id, digit string, or question URL; null if neither. */
export function parseQuestionRef(input: string): number | null {
  const text = input.trim();
  if (/^\d+$/.test(text)) {
    return parseInt(text, 10);
  }
  const url = text.match(/\/q(?:uestions)?\/(\d+)/);
  if (url) {
    return parseInt(url[1], 10);
  }
  return null;
}

async function readError(resp: Response): Promise<ApiError> {
  let code = "http_error";
  let detail = `service responded ${resp.status}`;
  try {
    const body = await resp.json();
    if (body && typeof body.error === "string") {
      code = body.error;
      detail = body.detail ?? detail;
    }
  } catch {
    // non-JSON error body; keep the generic detail
  }
  return new ApiError(resp.status, code, detail);
}

export class Client {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  private async post<T>(path: string, payload: unknown): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    if (!resp.ok) {
      throw await readError(resp);
    }
    return (await resp.json()) as T;
  }

  predict(questionA: number, questionB: number): Promise<Verdict> {
    return this.post<Verdict>("/v1/predict", {
      question_a: questionA,
      question_b: questionB,
    });
  }

  feedback(
    questionA: number,
    questionB: number,
    userSaysHarder: number,
  ): Promise<FeedbackResult> {
    return this.post<FeedbackResult>("/v1/feedback", {
      question_a: questionA,
      question_b: questionB,
      user_says_harder: userSaysHarder,
    });
  }

  async health(): Promise<Health> {
    const resp = await this.fetchFn(this.baseUrl + "/v1/health");
    if (!resp.ok) {
      throw await readError(resp);
    }
    return (await resp.json()) as Health;
  }
}
