import type { ApiClient } from "./api.js";
import type { PracticeView } from "./types.js";

export type QuizPhase = "unanswered" | "incorrect" | "correct";

export interface QuizSnapshot {
  phase: QuizPhase;
  selectedIndex: number | null;
  feedback: string | null;
  /** Choices stay selectable after a wrong answer; a correct answer locks. */
  locked: boolean;
  attempts: number;
}

/**
 * State machine for one practice exercise. The client never knows the
 * correct answer up front — grading is a server round trip, and the
 * rendered state comes entirely from the server's verdict and feedback.
 */
export class QuizController {
  private readonly api: ApiClient;
  private readonly contentId: string;
  readonly practice: PracticeView;
  private phase: QuizPhase = "unanswered";
  private selectedIndex: number | null = null;
  private feedback: string | null = null;
  private attempts = 0;
  private submitting = false;

  constructor(api: ApiClient, contentId: string, practice: PracticeView) {
    this.api = api;
    this.contentId = contentId;
    this.practice = practice;
  }

  snapshot(): QuizSnapshot {
    return {
      phase: this.phase,
      selectedIndex: this.selectedIndex,
      feedback: this.feedback,
      locked: this.phase === "correct",
      attempts: this.attempts,
    };
  }

  select(index: number): void {
    if (this.phase === "correct") return; // locked after a correct answer
    if (index < 0 || index >= this.practice.choices.length) {
      throw new RangeError(`choice index ${index} out of range`);
    }
    this.selectedIndex = index;
  }

  async submit(): Promise<QuizSnapshot> {
    if (this.phase === "correct") return this.snapshot();
    if (this.selectedIndex === null) throw new Error("select a choice before submitting");
    if (this.submitting) throw new Error("submission already in flight");
    this.submitting = true;
    try {
      const result = await this.api.submitAnswer(this.contentId, this.practice.id, this.selectedIndex);
      this.attempts += 1;
      this.feedback = result.feedback;
      this.phase = result.correct ? "correct" : "incorrect";
      return this.snapshot();
    } finally {
      this.submitting = false;
    }
  }
}
