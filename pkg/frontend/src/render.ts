import type { AnnotatorSession } from "./session.js";
import type { QuestionKey } from "./types.js";

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function likertRow(
  key: QuestionKey,
  label: string,
  scale: string[],
  selected: number | null,
): string {
  const options = scale
    .map((anchor, index) => {
      const value = index + 1;
      const checked = selected === value ? " checked" : "";
      return (
        `<label class="anchor"><input type="radio" name="${key}" value="${value}"${checked}>` +
        `${escapeHtml(anchor)}</label>`
      );
    })
    .join("");
  return (
    `<fieldset class="likert" data-key="${key}">` +
    `<legend>${escapeHtml(label)}</legend>${options}</fieldset>`
  );
}

/**
 * Render the whole annotator screen as an HTML string. The candidate image
 * always sits rightmost, after the three references.
 */
export function renderScreen(session: AnnotatorSession, imageUrl: (path: string) => string): string {
  if (session.state === "loading") {
    return `<main class="screen loading"><p>Loading…</p></main>`;
  }
  if (session.state === "error") {
    return (
      `<main class="screen error"><p>Something went wrong: ` +
      `${escapeHtml(session.errorDetail ?? "unknown error")}</p></main>`
    );
  }
  if (session.state === "done") {
    return (
      `<main class="screen done"><h1>All done — thank you!</h1>` +
      `<p>You answered ${session.answered} of ${session.total} questions.</p></main>`
    );
  }

  const question = session.current;
  if (!question) return `<main class="screen loading"><p>Loading…</p></main>`;

  const references = question.image_urls.references
    .map((path, i) => `<img class="reference" alt="reference ${i + 1}" src="${imageUrl(path)}">`)
    .join("");
  const candidate = `<img class="candidate" alt="candidate" src="${imageUrl(question.image_urls.candidate)}">`;

  const rows = question.questions
    .map((q) => {
      const key = q.key as QuestionKey;
      const selected =
        key === "q2"
          ? session.draft.q2
          : key === "q3"
            ? session.draft.q3
            : (session.draft.q1[Number(key.slice(3)) - 1] ?? null);
      return likertRow(key, q.label, question.scale, selected);
    })
    .join("");

  const disabled = session.isComplete() ? "" : " disabled";
  const message = session.message
    ? `<p class="message" role="alert">${escapeHtml(session.message)}</p>`
    : "";

  return (
    `<main class="screen question">` +
    `<header><h1>Question ${question.position + 1} of ${question.total}</h1></header>` +
    `<section class="images">${references}${candidate}</section>` +
    `<form>${rows}` +
    `<label class="inappropriate"><input type="checkbox" name="inappropriate"` +
    `${session.draft.inappropriate ? " checked" : ""}>Flag as inappropriate</label>` +
    `${message}` +
    `<button type="submit"${disabled}>Submit</button>` +
    `</form></main>`
  );
}
