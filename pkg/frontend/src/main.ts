import { QuizApi } from "./api.js";
import { QuizApp } from "./app.js";

const params = new URLSearchParams(window.location.search);
const base = params.get("api") ?? "";
const topic = params.get("topic") ?? "liberty";
const annotator = params.get("annotator") ?? "teacher";

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app mount point");
}

const app = new QuizApp(root, new QuizApi(base));
void app.start(annotator, topic).catch((err) => {
  root.textContent = `failed to start: ${err instanceof Error ? err.message : err}`;
});
