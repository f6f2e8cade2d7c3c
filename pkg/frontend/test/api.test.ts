import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

interface Recorded {
  url: string;
  method: string;
  headers: Record<string, string>;
  body: string | undefined;
}

function mockFetch(status: number, body: unknown) {
  const calls: Recorded[] = [];
  const fetchFn = async (url: string, init?: RequestInit): Promise<Response> => {
    calls.push({
      url,
      method: init?.method ?? "GET",
      headers: (init?.headers as Record<string, string>) ?? {},
      body: init?.body as string | undefined,
    });
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { calls, fetchFn };
}

describe("ApiClient", () => {
  it("sends the token in the Authorization header, never in the URL", async () => {
    const { calls, fetchFn } = mockFetch(200, { courses: [] });
    const api = new ApiClient("http://host:8000", "secret-token", fetchFn);
    await api.listCourses();
    expect(calls[0]!.url).toBe("http://host:8000/api/v1/courses");
    expect(calls[0]!.url).not.toContain("secret-token");
    expect(calls[0]!.headers.Authorization).toBe("Bearer secret-token");
  });

  it("strips trailing slashes from the base URL", async () => {
    const { calls, fetchFn } = mockFetch(200, { courses: [] });
    await new ApiClient("http://host:8000///", "t", fetchFn).listCourses();
    expect(calls[0]!.url).toBe("http://host:8000/api/v1/courses");
  });

  it("posts personalize input as JSON with snake_case fields", async () => {
    const { calls, fetchFn } = mockFetch(202, { job_id: "j1" });
    const api = new ApiClient("http://host", "t", fetchFn);
    const result = await api.personalize("c1", "Jujutsu Kaisen", "data analyst");
    expect(result.job_id).toBe("j1");
    expect(calls[0]!.method).toBe("POST");
    expect(JSON.parse(calls[0]!.body!)).toEqual({
      interests: "Jujutsu Kaisen",
      career_goals: "data analyst",
    });
  });

  it("uploads CSV with a text/csv content type and the raw body", async () => {
    const { calls, fetchFn } = mockFetch(201, { course_id: "c1", version_hash: "v" });
    await new ApiClient("http://host", "t", fetchFn).uploadCourseCsv("a,b\n1,2\n");
    expect(calls[0]!.headers["Content-Type"]).toBe("text/csv");
    expect(calls[0]!.body).toBe("a,b\n1,2\n");
  });

  it("URL-encodes path segments", async () => {
    const { calls, fetchFn } = mockFetch(200, {});
    await new ApiClient("http://host", "t", fetchFn).getCourse("odd id/with?chars");
    expect(calls[0]!.url).toBe("http://host/api/v1/courses/odd%20id%2Fwith%3Fchars");
  });

  it("raises ApiError carrying the structured error body", async () => {
    const { fetchFn } = mockFetch(409, {
      code: "curriculum_not_saved",
      message: "save the curriculum before requesting content",
    });
    const api = new ApiClient("http://host", "t", fetchFn);
    const err = await api.requestContent("cu", "s", "ss").catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(409);
    expect((err as ApiError).code).toBe("curriculum_not_saved");
  });

  it("tolerates non-JSON error bodies", async () => {
    const fetchFn = async () => new Response("Bad Gateway", { status: 502 });
    const api = new ApiClient("http://host", "t", fetchFn);
    const err = await api.listCourses().catch((e: unknown) => e);
    expect((err as ApiError).code).toBe("http_error");
    expect((err as ApiError).status).toBe(502);
  });

  it("submits answers with the chosen_index field", async () => {
    const { calls, fetchFn } = mockFetch(200, { correct: true, feedback: "Correct. Yes." });
    const api = new ApiClient("http://host", "t", fetchFn);
    const result = await api.submitAnswer("content1", "p1", 2);
    expect(result.correct).toBe(true);
    expect(JSON.parse(calls[0]!.body!)).toEqual({ chosen_index: 2 });
    expect(calls[0]!.url).toBe("http://host/api/v1/content/content1/practices/p1/answers");
  });
});
