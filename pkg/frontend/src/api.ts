import type {
  AnswerResult,
  ApiErrorBody,
  Content,
  CourseDetail,
  CourseSummary,
  Curriculum,
  Job,
  SectionPatch,
} from "./types.js";

/** A non-2xx response from the service, carrying its structured error body. */
export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly details: unknown;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.name = "ApiError";
    this.status = status;
    this.code = body.code;
    this.details = body.details;
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/**
 * Typed client for the /api/v1 HTTP API. The bearer token travels only in
 * the Authorization header — never in URLs or query strings.
 */
export class ApiClient {
  private readonly base: string;
  private readonly token: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, token: string, fetchFn: FetchLike = fetch) {
    this.base = baseUrl.replace(/\/+$/, "") + "/api/v1";
    this.token = token;
    this.fetchFn = fetchFn;
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    contentType = "application/json",
  ): Promise<T> {
    const init: RequestInit = {
      method,
      headers: { Authorization: `Bearer ${this.token}` },
    };
    if (body !== undefined) {
      (init.headers as Record<string, string>)["Content-Type"] = contentType;
      init.body = typeof body === "string" ? body : JSON.stringify(body);
    }
    const response = await this.fetchFn(this.base + path, init);
    if (!response.ok) {
      let errorBody: ApiErrorBody;
      try {
        errorBody = (await response.json()) as ApiErrorBody;
      } catch {
        errorBody = { code: "http_error", message: `HTTP ${response.status}` };
      }
      throw new ApiError(response.status, errorBody);
    }
    return (await response.json()) as T;
  }

  // -- teacher --

  uploadCourseJson(document: string): Promise<{ course_id: string; version_hash: string }> {
    return this.request("POST", "/courses", document, "application/json");
  }

  uploadCourseCsv(csv: string): Promise<{ course_id: string; version_hash: string }> {
    return this.request("POST", "/courses", csv, "text/csv");
  }

  listCourses(): Promise<{ courses: CourseSummary[] }> {
    return this.request("GET", "/courses");
  }

  getCourse(courseId: string): Promise<CourseDetail> {
    return this.request("GET", `/courses/${encodeURIComponent(courseId)}`);
  }

  updateSection(
    courseId: string,
    sectionId: string,
    patch: SectionPatch,
  ): Promise<{ version_hash: string }> {
    return this.request(
      "PATCH",
      `/courses/${encodeURIComponent(courseId)}/sections/${encodeURIComponent(sectionId)}`,
      patch,
    );
  }

  publishCourse(courseId: string): Promise<{ published: boolean; version_hash: string }> {
    return this.request("POST", `/courses/${encodeURIComponent(courseId)}/publish`);
  }

  // -- student --

  personalize(
    courseId: string,
    interests: string,
    careerGoals: string,
  ): Promise<{ job_id: string }> {
    return this.request("POST", `/courses/${encodeURIComponent(courseId)}/personalize`, {
      interests,
      career_goals: careerGoals,
    });
  }

  getJob(jobId: string): Promise<Job> {
    return this.request("GET", `/jobs/${encodeURIComponent(jobId)}`);
  }

  getCurriculum(curriculumId: string): Promise<Curriculum> {
    return this.request("GET", `/curricula/${encodeURIComponent(curriculumId)}`);
  }

  saveCurriculum(curriculumId: string): Promise<{ state: string }> {
    return this.request("POST", `/curricula/${encodeURIComponent(curriculumId)}/save`);
  }

  requestContent(
    curriculumId: string,
    sectionId: string,
    subsectionId: string,
  ): Promise<{ job_id: string }> {
    return this.request(
      "POST",
      `/curricula/${encodeURIComponent(curriculumId)}/sections/${encodeURIComponent(sectionId)}` +
        `/subsections/${encodeURIComponent(subsectionId)}/content`,
    );
  }

  getContent(contentId: string): Promise<Content> {
    return this.request("GET", `/content/${encodeURIComponent(contentId)}`);
  }

  submitAnswer(contentId: string, practiceId: string, chosenIndex: number): Promise<AnswerResult> {
    return this.request(
      "POST",
      `/content/${encodeURIComponent(contentId)}/practices/${encodeURIComponent(practiceId)}/answers`,
      { chosen_index: chosenIndex },
    );
  }
}
