import type { SurveyApiClient } from "./client.js";
import type { Draft, NextQuestion, QuestionKey, ResponsePayload } from "./types.js";
import { emptyDraft } from "./types.js";

/** The subset of window.localStorage the session needs (injectable in tests). */
export interface DraftStorage {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export type SessionState = "loading" | "question" | "done" | "error";

/**
 * One annotator working through one survey: loads questions in order,
 * keeps a per-question draft in storage so a reload never loses answers,
 * and advances on successful (or already-recorded) submissions.
 */
export class AnnotatorSession {
  state: SessionState = "loading";
  current: NextQuestion | null = null;
  draft: Draft = emptyDraft();
  /** Validation or server rejection message for the current question. */
  message: string | null = null;
  answered = 0;
  total = 0;
  errorDetail: string | null = null;

  constructor(
    private readonly client: SurveyApiClient,
    readonly surveyId: string,
    readonly annotatorId: string,
    private readonly storage: DraftStorage,
  ) {}

  private draftKey(questionId: string): string {
    return `cultdiff-draft:${this.surveyId}:${this.annotatorId}:${questionId}`;
  }

  async start(): Promise<void> {
    await this.loadNext();
  }

  private async loadNext(): Promise<void> {
    this.state = "loading";
    this.message = null;
    try {
      const next = await this.client.next(this.surveyId, this.annotatorId);
      this.answered = next.answered;
      this.total = next.total;
      if (next.done) {
        this.state = "done";
        this.current = null;
        return;
      }
      this.current = next;
      this.draft = this.restoreDraft(next.question_id);
      this.state = "question";
    } catch (error) {
      this.state = "error";
      this.errorDetail = error instanceof Error ? error.message : String(error);
    }
  }

  private restoreDraft(questionId: string): Draft {
    const raw = this.storage.getItem(this.draftKey(questionId));
    if (raw === null) return emptyDraft();
    try {
      const parsed = JSON.parse(raw) as Draft;
      if (Array.isArray(parsed.q1) && parsed.q1.length === 4) return parsed;
    } catch {
      // fall through: corrupt draft is discarded
    }
    return emptyDraft();
  }

  private persistDraft(): void {
    if (!this.current) return;
    this.storage.setItem(this.draftKey(this.current.question_id), JSON.stringify(this.draft));
  }

  setAnswer(key: QuestionKey, value: number): void {
    if (key === "q2") this.draft.q2 = value;
    else if (key === "q3") this.draft.q3 = value;
    else this.draft.q1[Number(key.slice(3)) - 1] = value;
    this.message = null;
    this.persistDraft();
  }

  setInappropriate(flag: boolean): void {
    this.draft.inappropriate = flag;
    this.persistDraft();
  }

  /** True once every one of the six questions has a rating. */
  isComplete(): boolean {
    return this.draft.q1.every((v) => v !== null) && this.draft.q2 !== null && this.draft.q3 !== null;
  }

  /** Submit the current draft; advances on 201 and on 409 (already recorded). */
  async submit(): Promise<void> {
    if (this.state !== "question" || !this.current) return;
    if (!this.isComplete()) {
      this.message = "Please answer all six questions before submitting.";
      return;
    }
    const payload: ResponsePayload = {
      question_id: this.current.question_id,
      q1: this.draft.q1 as number[],
      q2: this.draft.q2 as number,
      q3: this.draft.q3 as number,
      inappropriate: this.draft.inappropriate,
    };
    try {
      const result = await this.client.submit(this.surveyId, this.annotatorId, payload);
      if (result.status === 422) {
        // keep the draft so the annotator can correct it; show the server's
        // explanation exactly as sent
        this.message = result.detail ?? "The server rejected this response.";
        return;
      }
      this.storage.removeItem(this.draftKey(this.current.question_id));
      await this.loadNext();
    } catch (error) {
      this.state = "error";
      this.errorDetail = error instanceof Error ? error.message : String(error);
    }
  }
}
