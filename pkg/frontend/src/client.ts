import type { NextResponse, ResponsePayload } from "./types.js";

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ status: number; json(): Promise<unknown> }>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
  }
}

export interface SubmitResult {
  status: number; // 201 created, 409 duplicate, 422 rejected
  detail: string | null; // server-provided message for 422, verbatim
}

async function detailOf(response: { json(): Promise<unknown> }): Promise<string | null> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    return typeof body.detail === "string" ? body.detail : null;
  } catch {
    return null;
  }
}

/** Thin typed wrapper over the survey HTTP endpoints. */
export class SurveyApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike,
  ) {}

  async next(surveyId: string, annotatorId: string): Promise<NextResponse> {
    const url = `${this.baseUrl}/api/surveys/${surveyId}/annotators/${annotatorId}/next`;
    const response = await this.fetchImpl(url);
    if (response.status !== 200) {
      throw new ApiError(response.status, (await detailOf(response)) ?? "request failed");
    }
    return (await response.json()) as NextResponse;
  }

  async submit(
    surveyId: string,
    annotatorId: string,
    payload: ResponsePayload,
  ): Promise<SubmitResult> {
    const url = `${this.baseUrl}/api/surveys/${surveyId}/annotators/${annotatorId}/responses`;
    const response = await this.fetchImpl(url, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    if (response.status === 201 || response.status === 409) {
      return { status: response.status, detail: null };
    }
    if (response.status === 422) {
      return { status: 422, detail: await detailOf(response) };
    }
    throw new ApiError(response.status, (await detailOf(response)) ?? "request failed");
  }

  imageUrl(path: string): string {
    return `${this.baseUrl}${path}`;
  }
}
