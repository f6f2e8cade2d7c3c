/** Shapes returned by the /api/v1 service, as documented in its API reference. */

export type Role = "teacher" | "student";

export interface ApiErrorBody {
  code: string;
  message: string;
  details?: unknown;
}

export interface CourseSummary {
  id: string;
  title: string;
  description: string;
  version_hash: string;
  published: boolean;
}

export interface SubsectionView {
  id: string;
  title: string;
  body?: string;
  example_exercises?: PracticeView[];
}

export interface SectionView {
  id: string;
  title: string;
  summary: string;
  scope: string;
  learning_goals: string[];
  subsections: SubsectionView[];
}

export interface CourseDetail extends CourseSummary {
  sections: SectionView[];
}

export interface SectionPatch {
  title?: string;
  summary?: string;
  scope?: string;
  learning_goals?: string[];
}

export type JobState = "queued" | "running" | "succeeded" | "failed";

export interface Job {
  id: string;
  kind: "curriculum" | "content";
  subject: Record<string, string>;
  state: JobState;
  created_at: string;
  updated_at: string;
  result_ref?: string;
  error?: string;
  error_code?: string;
}

export interface CurriculumEntry {
  section_id: string;
  personalized_title: string;
  personalized_summary: string;
  analogy_theme: string;
}

export interface Curriculum {
  id: string;
  course_id: string;
  course_version_hash: string;
  persona_key: string;
  state: "generated" | "saved";
  entries: CurriculumEntry[];
}

export interface ChoiceView {
  text: string;
  /** Present only when the server is configured to reveal answers. */
  feedback?: string;
}

export interface PracticeView {
  id: string;
  stem: string;
  choices: ChoiceView[];
  correct_index?: number;
}

export interface Content {
  id: string;
  course_id: string;
  course_version_hash: string;
  curriculum_id: string;
  section_id: string;
  subsection_id: string;
  body: string;
  practices: PracticeView[];
}

export interface AnswerResult {
  correct: boolean;
  feedback: string;
}
