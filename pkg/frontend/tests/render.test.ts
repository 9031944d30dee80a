import { describe, expect, it } from "vitest";

import { SurveyApiClient } from "../src/client.js";
import { renderScreen } from "../src/render.js";
import { AnnotatorSession } from "../src/session.js";
import { FakeSurveyServer, MemoryStorage, SCALE } from "./fakeServer.js";

const imageUrl = (path: string) => path;

async function startedSession(questions = 3) {
  const server = new FakeSurveyServer("s1", ["ann-1"], questions);
  const client = new SurveyApiClient("", server.fetch);
  const session = new AnnotatorSession(client, "s1", "ann-1", new MemoryStorage());
  await session.start();
  return session;
}

describe("screen rendering", () => {
  it("places the candidate image rightmost, after the three references", async () => {
    const session = await startedSession();
    const html = renderScreen(session, imageUrl);
    const images = [...html.matchAll(/<img class="(reference|candidate)"/g)].map((m) => m[1]);
    expect(images).toEqual(["reference", "reference", "reference", "candidate"]);
    expect(html.lastIndexOf('class="reference"')).toBeLessThan(html.indexOf('class="candidate"'));
  });

  it("labels every rating with the five scale anchors in order", async () => {
    const session = await startedSession();
    const html = renderScreen(session, imageUrl);
    for (const anchor of SCALE) {
      expect(html).toContain(anchor);
    }
    const firstGroup = html.slice(html.indexOf("<fieldset"), html.indexOf("</fieldset>"));
    const anchorOrder = SCALE.map((a) => firstGroup.indexOf(a));
    expect([...anchorOrder].sort((a, b) => a - b)).toEqual(anchorOrder);
    // six rating groups: four aspects + description match + realism
    expect([...html.matchAll(/<fieldset/g)]).toHaveLength(6);
  });

  it("disables submit until all six answers are present", async () => {
    const session = await startedSession();
    expect(renderScreen(session, imageUrl)).toContain("<button type=\"submit\" disabled>");
    for (const key of ["q1_1", "q1_2", "q1_3", "q1_4", "q2"] as const) {
      session.setAnswer(key, 4);
      expect(renderScreen(session, imageUrl)).toContain(" disabled>");
    }
    session.setAnswer("q3", 4);
    expect(renderScreen(session, imageUrl)).toContain("<button type=\"submit\">");
  });

  it("marks previously chosen ratings as checked", async () => {
    const session = await startedSession();
    session.setAnswer("q1_2", 5);
    const html = renderScreen(session, imageUrl);
    expect(html).toContain('name="q1_2" value="5" checked');
  });

  it("shows progress and the completion screen", async () => {
    const session = await startedSession(2);
    expect(renderScreen(session, imageUrl)).toContain("Question 1 of 2");
    for (let i = 0; i < 2; i++) {
      for (const key of ["q1_1", "q1_2", "q1_3", "q1_4", "q2", "q3"] as const) {
        session.setAnswer(key, 3);
      }
      await session.submit();
    }
    const html = renderScreen(session, imageUrl);
    expect(html).toContain("All done");
    expect(html).toContain("2 of 2");
  });

  it("renders a server rejection message", async () => {
    const session = await startedSession();
    for (const key of ["q1_1", "q1_2", "q1_3", "q1_4", "q2", "q3"] as const) {
      session.setAnswer(key, 3);
    }
    session.setAnswer("q2", 9 as never);
    await session.submit();
    const html = renderScreen(session, imageUrl);
    expect(html).toContain('<p class="message" role="alert">likert value 9 outside 1..5</p>');
  });
});
