import type { ApiClient } from "./api.js";
import { pollJob, type PollOptions } from "./polling.js";
import type { Content, Curriculum, Job } from "./types.js";

/**
 * The two human flows as framework-free async functions over the API
 * client. The DOM layer calls these; headless tests drive the exact same
 * code paths against a live service.
 */

export interface TeacherUploadResult {
  courseId: string;
  versionHash: string;
}

export async function uploadCourse(
  api: ApiClient,
  fileName: string,
  fileText: string,
): Promise<TeacherUploadResult> {
  const result = fileName.toLowerCase().endsWith(".csv")
    ? await api.uploadCourseCsv(fileText)
    : await api.uploadCourseJson(fileText);
  return { courseId: result.course_id, versionHash: result.version_hash };
}

export async function publishCourse(api: ApiClient, courseId: string): Promise<string> {
  const result = await api.publishCourse(courseId);
  return result.version_hash;
}

/** Personalize a course and wait for the curriculum to be generated. */
export async function personalizeAndAwait(
  api: ApiClient,
  courseId: string,
  interests: string,
  careerGoals: string,
  poll?: PollOptions,
): Promise<Curriculum> {
  const { job_id } = await api.personalize(courseId, interests, careerGoals);
  const job = await pollJob(api, job_id, poll);
  return api.getCurriculum(requireResult(job));
}

export async function saveCurriculum(api: ApiClient, curriculumId: string): Promise<void> {
  await api.saveCurriculum(curriculumId);
}

/** Request personalized content for one subsection and wait for it. */
export async function openSubsection(
  api: ApiClient,
  curriculumId: string,
  sectionId: string,
  subsectionId: string,
  poll?: PollOptions,
): Promise<Content> {
  const { job_id } = await api.requestContent(curriculumId, sectionId, subsectionId);
  const job = await pollJob(api, job_id, poll);
  return api.getContent(requireResult(job));
}

function requireResult(job: Job): string {
  if (job.result_ref === undefined) {
    throw new Error(`job ${job.id} succeeded without a result reference`);
  }
  return job.result_ref;
}
