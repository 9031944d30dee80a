/** Payload shapes of the survey HTTP API. */

export interface QuestionLabel {
  key: string; // "q1_1" .. "q1_4", "q2", "q3"
  label: string;
}

export interface NextQuestion {
  done: false;
  question_id: string;
  position: number;
  total: number;
  answered: number;
  image_urls: {
    references: string[];
    candidate: string;
  };
  questions: QuestionLabel[];
  scale: string[]; // five Likert anchors, index 0 = rating 1
}

export interface SurveyDone {
  done: true;
  answered: number;
  total: number;
}

export type NextResponse = NextQuestion | SurveyDone;

export interface ResponsePayload {
  question_id: string;
  q1: number[]; // exactly four values, 1..5
  q2: number;
  q3: number;
  inappropriate: boolean;
}

/** Partially filled answers, persisted locally per question. */
export interface Draft {
  q1: Array<number | null>;
  q2: number | null;
  q3: number | null;
  inappropriate: boolean;
}

export const QUESTION_KEYS = ["q1_1", "q1_2", "q1_3", "q1_4", "q2", "q3"] as const;
export type QuestionKey = (typeof QUESTION_KEYS)[number];

export function emptyDraft(): Draft {
  return { q1: [null, null, null, null], q2: null, q3: null, inappropriate: false };
}
