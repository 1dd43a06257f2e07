// Bootstrap: resolve the service base URL and session, then run the loop.
//
// Open as: index.html?base=http://host:port&study=<id>&annotator=<name>
// Reloading mid-study resumes at the same cursor: enrollment is idempotent
// per annotator, so the same session token comes back.

import { StudyApiClient } from "./api.js";
import { runSession } from "./session.js";
import { RatingView } from "./ui.js";

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("base") ?? window.location.origin;
  const studyId = params.get("study");
  const annotatorId = params.get("annotator");
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  if (!studyId || !annotatorId) {
    root.textContent =
      "Missing query parameters: ?study=<study id>&annotator=<your id> " +
      "(optionally &base=<service url>).";
    return;
  }
  const api = new StudyApiClient(base);
  const session = await api.enroll(studyId, annotatorId);
  const view = new RatingView(root, api, session.instructions ?? "");
  await runSession(api, session.session_id, view);
}

boot().catch((error) => {
  const root = document.getElementById("app");
  if (root) root.textContent = `Failed to start: ${error}`;
});
