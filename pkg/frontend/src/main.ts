/** Browser entry point: wires the session to the DOM. */

import { SurveyApiClient } from "./client.js";
import { renderScreen } from "./render.js";
import { AnnotatorSession } from "./session.js";
import type { QuestionKey } from "./types.js";

function requireParam(params: URLSearchParams, name: string): string {
  const value = params.get(name);
  if (!value) throw new Error(`missing ?${name}= query parameter`);
  return value;
}

export async function mount(root: HTMLElement): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const baseUrl = params.get("api") ?? "";
  const client = new SurveyApiClient(baseUrl, (url, init) => fetch(url, init));
  const session = new AnnotatorSession(
    client,
    requireParam(params, "survey"),
    requireParam(params, "annotator"),
    window.localStorage,
  );

  const redraw = () => {
    root.innerHTML = renderScreen(session, (path) => client.imageUrl(path));
  };

  root.addEventListener("change", (event) => {
    const input = event.target as HTMLInputElement;
    if (input.type === "radio") {
      session.setAnswer(input.name as QuestionKey, Number(input.value));
      redraw();
    } else if (input.name === "inappropriate") {
      session.setInappropriate(input.checked);
    }
  });
  root.addEventListener("submit", (event) => {
    event.preventDefault();
    void session.submit().then(redraw);
  });

  await session.start();
  redraw();
}

if (typeof document !== "undefined") {
  const root = document.getElementById("app");
  if (root) void mount(root);
}
