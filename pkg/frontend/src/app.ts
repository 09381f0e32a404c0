/**
 * Quiz design view: reading material with word-level span selection on
 * the left, candidate review cards on the right.
 *
 * Selection works on whole words (click the first word, then the last)
 * because word boundaries are what the concept offsets mean anyway and
 * click targets survive every browser's quirks around text selection.
 * All mutations await the server; nothing is rendered optimistically.
 */

import {
  ApiError,
  ApiWarning,
  Batch,
  Candidate,
  QuizApi,
  Reason,
  TaxonomyCategory,
} from "./api.js";

interface WordSpan {
  start: number;
  end: number;
  element: HTMLSpanElement;
}

const CONCEPT_WORD_GUIDANCE = 8;

export class QuizApp {
  private sessionId = "";
  private materialText = "";
  private words: WordSpan[] = [];
  private anchor: WordSpan | null = null;
  private focus: WordSpan | null = null;
  private categories: TaxonomyCategory[] = [];
  private batch: Batch | null = null;
  private judgedIndexes = new Set<number>();
  private acceptedCount = 0;
  private judgedCount = 0;
  private finalized = false;
  private busy = false;
  private conceptError = "";

  private readonly materialPane: HTMLElement;
  private readonly selectionBar: HTMLElement;
  private readonly warningsPane: HTMLElement;
  private readonly candidatesPane: HTMLElement;
  private readonly quizBar: HTMLElement;
  private readonly summaryPane: HTMLElement;

  constructor(root: HTMLElement, private readonly api: QuizApi) {
    root.replaceChildren();
    const layout = el("div", "layout");
    const left = el("section", "pane pane-material");
    const right = el("section", "pane pane-review");
    this.materialPane = el("div", "material");
    this.materialPane.id = "material";
    this.selectionBar = el("div", "selection-bar");
    this.selectionBar.id = "selection-bar";
    this.warningsPane = el("div", "warnings");
    this.warningsPane.id = "warnings";
    this.candidatesPane = el("div", "candidates");
    this.candidatesPane.id = "candidates";
    this.quizBar = el("div", "quiz-bar");
    this.quizBar.id = "quiz-bar";
    this.summaryPane = el("div", "summary");
    this.summaryPane.id = "summary";
    left.append(this.materialPane, this.selectionBar);
    right.append(this.warningsPane, this.candidatesPane, this.quizBar, this.summaryPane);
    layout.append(left, right);
    root.append(layout);
  }

  async start(annotatorId: string, topicId: string): Promise<void> {
    const [material, taxonomy, session] = await Promise.all([
      this.api.material(topicId),
      this.api.taxonomy(),
      this.api.createSession(annotatorId, topicId),
    ]);
    this.sessionId = session.session_id;
    this.materialText = material.text;
    this.categories = taxonomy.categories;
    this.renderMaterial();
    this.renderSelectionBar();
    this.renderQuizBar();
  }

  // -- span selection ------------------------------------------------------

  private renderMaterial(): void {
    this.materialPane.replaceChildren();
    this.words = [];
    const pattern = /\S+/g;
    let cursor = 0;
    for (const match of this.materialText.matchAll(pattern)) {
      const start = match.index ?? 0;
      if (start > cursor) {
        this.materialPane.append(this.materialText.slice(cursor, start));
      }
      const span = el("span", "word");
      span.textContent = match[0];
      span.dataset.start = String(start);
      span.dataset.end = String(start + match[0].length);
      const word: WordSpan = { start, end: start + match[0].length, element: span };
      span.addEventListener("click", () => this.onWordClick(word));
      this.materialPane.append(span);
      this.words.push(word);
      cursor = start + match[0].length;
    }
    if (cursor < this.materialText.length) {
      this.materialPane.append(this.materialText.slice(cursor));
    }
  }

  private onWordClick(word: WordSpan): void {
    if (this.batch || this.finalized) {
      return;
    }
    if (!this.anchor || this.focus) {
      this.anchor = word;
      this.focus = null;
    } else {
      this.focus = word;
    }
    this.paintSelection();
    this.renderSelectionBar();
  }

  private selectedRange(): { start: number; end: number } | null {
    if (!this.anchor) {
      return null;
    }
    const other = this.focus ?? this.anchor;
    return {
      start: Math.min(this.anchor.start, other.start),
      end: Math.max(this.anchor.end, other.end),
    };
  }

  private paintSelection(): void {
    const range = this.selectedRange();
    for (const word of this.words) {
      const inside = range !== null && word.start >= range.start && word.end <= range.end;
      word.element.classList.toggle("selected", inside);
    }
  }

  private renderSelectionBar(): void {
    this.selectionBar.replaceChildren();
    if (this.finalized) {
      return;
    }
    const range = this.selectedRange();
    const preview = el("span", "selection-preview");
    preview.id = "selection-preview";
    if (range) {
      const text = this.materialText.slice(range.start, range.end);
      preview.textContent = `"${text}"`;
      const wordCount = text.split(/\s+/).filter(Boolean).length;
      if (wordCount > CONCEPT_WORD_GUIDANCE) {
        preview.append(makeWarningBadge("concept_too_long", "long concepts are hard to target"));
      }
    } else {
      preview.textContent = "click a word, then the last word of the concept";
    }

    const confirm = button("Confirm concept", "confirm");
    confirm.id = "confirm-concept";
    confirm.disabled = this.batch !== null || this.busy;
    confirm.addEventListener("click", () => void this.confirmConcept());

    const clear = button("Clear", "clear");
    clear.id = "clear-selection";
    clear.addEventListener("click", () => {
      this.anchor = null;
      this.focus = null;
      this.paintSelection();
      this.renderSelectionBar();
    });

    const error = el("span", "inline-error");
    error.id = "concept-error";
    error.textContent = this.conceptError;

    this.selectionBar.append(preview, confirm, clear, error);
  }

  private async confirmConcept(): Promise<void> {
    const range = this.selectedRange();
    if (!range || !this.materialText.slice(range.start, range.end).trim()) {
      this.conceptError = "select at least one word first";
      this.renderSelectionBar();
      return;
    }
    this.conceptError = "";
    this.busy = true;
    this.renderSelectionBar();
    try {
      const batch = await this.api.confirmConcept(this.sessionId, range.start, range.end);
      this.batch = batch;
      this.judgedIndexes = new Set();
      this.renderWarnings(batch.warnings);
      this.renderCandidates(batch);
    } catch (err) {
      this.conceptError = describe(err);
    } finally {
      this.busy = false;
      this.renderSelectionBar();
    }
  }

  // -- candidate review ----------------------------------------------------

  private renderWarnings(warnings: ApiWarning[]): void {
    this.warningsPane.replaceChildren();
    for (const warning of warnings) {
      this.warningsPane.append(makeWarningBadge(warning.code, warning.message));
    }
  }

  private renderCandidates(batch: Batch): void {
    this.candidatesPane.replaceChildren();
    const heading = el("h2", "concept-heading");
    heading.textContent = `Questions for "${batch.concept.answer_text}"`;
    this.candidatesPane.append(heading);
    if (batch.excluded_count > 0) {
      const note = el("p", "excluded-note");
      note.textContent = `${batch.excluded_count} model(s) did not answer in time`;
      this.candidatesPane.append(note);
    }
    // Server order is the shuffled presentation order; render it as-is.
    for (const candidate of batch.candidates) {
      this.candidatesPane.append(this.renderCard(candidate));
    }
  }

  private renderCard(candidate: Candidate): HTMLElement {
    const card = el("article", "candidate");
    card.dataset.index = String(candidate.presentation_index);

    const text = el("p", "question-text");
    text.textContent = candidate.text;

    const actions = el("div", "actions");
    const accept = button("Add to quiz", "accept");
    const reject = button("Refuse", "reject");
    actions.append(accept, reject);

    const picker = el("div", "reason-picker");
    picker.hidden = true;

    const status = el("p", "card-status");

    let chosen: Reason | null = null;
    const submit = button("Confirm refusal", "submit-reject");
    submit.disabled = true;

    const leaves = el("div", "leaves");
    const categoryRow = el("div", "category-row");
    for (const category of this.categories) {
      const categoryButton = button(category.display_name, "category");
      categoryButton.dataset.category = category.label;
      categoryButton.addEventListener("click", () => {
        chosen = null;
        submit.disabled = true;
        leaves.replaceChildren();
        for (const leaf of category.leaves) {
          const leafButton = button(leaf.display_name, "leaf");
          leafButton.dataset.leaf = leaf.label;
          leafButton.addEventListener("click", () => {
            chosen = { category: category.label, subtype: leaf.label };
            for (const other of leaves.querySelectorAll("button")) {
              other.classList.toggle("chosen", other === leafButton);
            }
            submit.disabled = false;
          });
          leaves.append(leafButton);
        }
      });
      categoryRow.append(categoryButton);
    }
    picker.append(categoryRow, leaves, submit);

    const lock = (label: string, cssClass: string) => {
      accept.disabled = true;
      reject.disabled = true;
      submit.disabled = true;
      picker.hidden = true;
      card.classList.add("judged", cssClass);
      status.textContent = label;
    };

    accept.addEventListener("click", () => {
      void this.submitJudgment(candidate, "Accept", undefined, () => {
        this.acceptedCount += 1;
        lock("in quiz", "accepted");
      }, lock);
    });
    reject.addEventListener("click", () => {
      picker.hidden = !picker.hidden;
    });
    submit.addEventListener("click", () => {
      if (!chosen) {
        return;
      }
      const reason = chosen;
      void this.submitJudgment(candidate, "Reject", reason, () => {
        lock(`refused: ${reason.category} / ${reason.subtype}`, "rejected");
      }, lock);
    });

    card.append(text, actions, picker, status);
    return card;
  }

  private async submitJudgment(
    candidate: Candidate,
    verdict: "Accept" | "Reject",
    reason: Reason | undefined,
    onDone: () => void,
    lock: (label: string, cssClass: string) => void,
  ): Promise<void> {
    if (this.busy || this.judgedIndexes.has(candidate.presentation_index)) {
      return;
    }
    this.busy = true;
    try {
      const outcome = await this.api.judge(
        this.sessionId,
        candidate.presentation_index,
        verdict,
        reason,
      );
      this.judgedIndexes.add(candidate.presentation_index);
      this.judgedCount = outcome.judged_count;
      onDone();
      if (outcome.state !== "CandidatesPresented") {
        this.batch = null;
        this.anchor = null;
        this.focus = null;
        this.paintSelection();
      }
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // Already judged on the server; treat the card as settled.
        this.judgedIndexes.add(candidate.presentation_index);
        lock("already judged", "rejected");
      } else {
        this.warningsPane.append(makeWarningBadge("request_failed", describe(err)));
      }
    } finally {
      this.busy = false;
      this.renderSelectionBar();
      this.renderQuizBar();
    }
  }

  // -- finalize ------------------------------------------------------------

  private renderQuizBar(): void {
    this.quizBar.replaceChildren();
    const counter = el("span", "counter");
    counter.id = "accepted-count";
    counter.textContent = `${this.acceptedCount} in quiz (${this.judgedCount} judged)`;

    const finalize = button("Finalize quiz", "finalize");
    finalize.id = "finalize";
    finalize.disabled = this.finalized || this.batch !== null || this.busy;
    finalize.addEventListener("click", () => void this.finalizeQuiz());

    this.quizBar.append(counter, finalize);
  }

  private async finalizeQuiz(): Promise<void> {
    this.busy = true;
    this.renderQuizBar();
    try {
      const outcome = await this.api.finalize(this.sessionId);
      this.finalized = true;
      this.acceptedCount = outcome.accepted_count;
      this.judgedCount = outcome.judged_count;
      this.renderWarnings(outcome.warnings);
      this.summaryPane.replaceChildren();
      const heading = el("h2", "summary-heading");
      heading.textContent = `Quiz finalized: ${outcome.accepted_count} questions`;
      const list = el("ol", "accepted-list");
      for (const item of outcome.accepted) {
        const entry = el("li", "accepted-item");
        entry.textContent = `${item.question_text} (${item.concept.answer_text})`;
        list.append(entry);
      }
      this.summaryPane.append(heading, list);
      this.candidatesPane.replaceChildren();
      this.renderSelectionBar();
    } catch (err) {
      this.warningsPane.append(makeWarningBadge("request_failed", describe(err)));
    } finally {
      this.busy = false;
      this.renderQuizBar();
    }
  }
}

// -- small DOM helpers -----------------------------------------------------

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  node.className = className;
  return node;
}

function button(label: string, className: string): HTMLButtonElement {
  const node = el("button", className);
  node.type = "button";
  node.textContent = label;
  return node;
}

function makeWarningBadge(code: string, message: string): HTMLElement {
  const badge = el("span", "warning-badge");
  badge.dataset.code = code;
  badge.textContent = message;
  return badge;
}

function describe(err: unknown): string {
  if (err instanceof ApiError) {
    return `${err.errorCode}: ${err.message}`;
  }
  return err instanceof Error ? err.message : String(err);
}
