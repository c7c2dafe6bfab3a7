// DOM wiring for the single-page UI. Every rendered verdict comes from one
// service response; the page never invents one. At most one request per
// action is in flight at a time.

import { ApiError, Client, Verdict, parseQuestionRef } from "./api.js";

interface CurrentPair {
  a: number;
  b: number;
  verdict: Verdict;
}

export interface App {
  submit(): Promise<void>;
  reject(): Promise<void>;
  readonly current: CurrentPair | null;
}

function el<T extends HTMLElement>(root: Document, id: string): T {
  const node = root.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

export function wireUp(root: Document, client: Client): App {
  const inputA = el<HTMLInputElement>(root, "question-a");
  const inputB = el<HTMLInputElement>(root, "question-b");
  const submitBtn = el<HTMLButtonElement>(root, "submit");
  const rejectBtn = el<HTMLButtonElement>(root, "reject");
  const retryBtn = el<HTMLButtonElement>(root, "retry");
  const errorBox = el<HTMLElement>(root, "error");
  const card = el<HTMLElement>(root, "verdict-card");
  const harderText = el<HTMLElement>(root, "harder-text");
  const confidenceBar = el<HTMLElement>(root, "confidence-bar");
  const confidenceLabel = el<HTMLElement>(root, "confidence-label");
  const coldBadge = el<HTMLElement>(root, "cold-badge");
  const feedbackStatus = el<HTMLElement>(root, "feedback-status");

  let current: CurrentPair | null = null;
  let predictInFlight = false;
  let feedbackInFlight = false;
  let lastFeedback: { a: number; b: number; harder: number } | null = null;

  function showError(message: string) {
    errorBox.textContent = message;
    errorBox.hidden = false;
  }

  function clearError() {
    errorBox.textContent = "";
    errorBox.hidden = true;
    retryBtn.hidden = true;
  }

  function renderVerdict(a: number, b: number, verdict: Verdict) {
    current = { a, b, verdict };
    const pct = Math.round(verdict.confidence * 100);
    harderText.textContent = `Question ${verdict.harder} is harder`;
    confidenceBar.style.width = `${pct}%`;
    confidenceLabel.textContent = `confidence ${pct}%`;
    coldBadge.hidden = !verdict.cold_start_used;
    feedbackStatus.textContent = "";
    rejectBtn.disabled = false;
    card.hidden = false;
  }

  async function submit(): Promise<void> {
    if (predictInFlight) {
      return;
    }
    clearError();
    const rawA = inputA.value;
    const rawB = inputB.value;
    if (!rawA.trim() || !rawB.trim()) {
      showError("Enter both questions (id or question URL).");
      return;
    }
    const a = parseQuestionRef(rawA);
    const b = parseQuestionRef(rawB);
    if (a === null || b === null) {
      const bad = a === null ? rawA : rawB;
      showError(`"${bad.trim()}" is not a question id or question URL.`);
      return;
    }
    if (a === b) {
      showError("Enter two different questions.");
      return;
    }
    predictInFlight = true;
    submitBtn.disabled = true;
    try {
      const verdict = await client.predict(a, b);
      renderVerdict(a, b, verdict);
    } catch (err) {
      // inputs and any previous verdict stay untouched
      if (err instanceof ApiError) {
        showError(err.message);
      } else {
        showError("Could not reach the service. Check that it is running.");
      }
    } finally {
      predictInFlight = false;
      submitBtn.disabled = false;
    }
  }

  async function sendFeedback(a: number, b: number, harder: number): Promise<void> {
    feedbackInFlight = true;
    rejectBtn.disabled = true;
    try {
      const result = await client.feedback(a, b, harder);
      retryBtn.hidden = true;
      lastFeedback = null;
      feedbackStatus.textContent = result.accepted
        ? "Feedback accepted — the model was updated."
        : "Feedback filtered — the model is confident and kept its verdict.";
      feedbackStatus.dataset.state = result.accepted ? "accepted" : "filtered";
    } catch (err) {
      lastFeedback = { a, b, harder };
      retryBtn.hidden = false;
      rejectBtn.disabled = false;
      if (err instanceof ApiError) {
        showError(err.message);
      } else {
        showError("Sending feedback failed. Retry when the service is back.");
      }
    } finally {
      feedbackInFlight = false;
    }
  }

  async function reject(): Promise<void> {
    if (feedbackInFlight || current === null) {
      return;
    }
    clearError();
    const { a, b, verdict } = current;
    const inverted = verdict.harder === a ? b : a;
    await sendFeedback(a, b, inverted);
  }

  async function retry(): Promise<void> {
    if (feedbackInFlight || lastFeedback === null) {
      return;
    }
    clearError();
    const { a, b, harder } = lastFeedback;
    await sendFeedback(a, b, harder);
  }

  submitBtn.addEventListener("click", (event) => {
    event.preventDefault();
    void submit();
  });
  rejectBtn.addEventListener("click", () => void reject());
  retryBtn.addEventListener("click", () => void retry());

  return {
    submit,
    reject,
    get current() {
      return current;
    },
  };
}
