/**
 * DOM shell for the single-page app. All service interaction goes through
 * the flow functions and the API client; this file only wires screens.
 */

import { ApiError } from "./api.js";
import { openSubsection, personalizeAndAwait, publishCourse, uploadCourse } from "./flows.js";
import { renderMarkdown, escapeHtml } from "./markdown.js";
import { QuizController } from "./quiz.js";
import { UiSession } from "./session.js";
import type { Content, CourseDetail, Curriculum, Role, SectionView } from "./types.js";

const root = () => document.getElementById("app")!;

function el(tag: string, attrs: Record<string, string> = {}, ...children: (Node | string)[]): HTMLElement {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  node.append(...children);
  return node;
}

function errorBanner(err: unknown): HTMLElement {
  const message = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
  return el("div", { class: "error-banner", role: "alert" }, message);
}

// ---- login ----

export function renderLogin(onLogin: (session: UiSession) => void): void {
  const base = el("input", { type: "text", value: window.location.origin, "aria-label": "Service URL" }) as HTMLInputElement;
  const token = el("input", { type: "password", "aria-label": "Access token" }) as HTMLInputElement;
  const role = el("select", { "aria-label": "Role" },
    el("option", { value: "teacher" }, "Teacher"),
    el("option", { value: "student" }, "Student"),
  ) as HTMLSelectElement;
  const button = el("button", {}, "Sign in");
  button.addEventListener("click", () => {
    if (token.value.trim() === "") return;
    const session = new UiSession(base.value, { token: token.value.trim(), role: role.value as Role }, window.sessionStorage);
    onLogin(session);
  });
  root().replaceChildren(
    el("h1", {}, "tutorcraft"),
    el("div", { class: "login" },
      el("label", {}, "Service ", base),
      el("label", {}, "Token ", token),
      el("label", {}, "Role ", role),
      button,
    ),
  );
}

// ---- teacher editor ----

export async function renderTeacherEditor(session: UiSession): Promise<void> {
  const { api } = session;
  const container = el("div", { class: "teacher" });
  root().replaceChildren(el("h1", {}, "Course editor"), container);

  const fileInput = el("input", { type: "file", accept: ".json,.csv" }) as HTMLInputElement;
  const uploadStatus = el("div", { class: "status" });
  fileInput.addEventListener("change", async () => {
    const file = fileInput.files?.[0];
    if (file === undefined) return;
    try {
      const text = await file.text();
      const result = await uploadCourse(api, file.name, text);
      uploadStatus.replaceChildren(`Uploaded ${result.courseId}`);
      await refresh();
    } catch (err) {
      uploadStatus.replaceChildren(errorBanner(err));
    }
  });

  const list = el("div", { class: "course-list" });
  const editor = el("div", { class: "section-editor" });

  async function refresh(): Promise<void> {
    const { courses } = await api.listCourses();
    list.replaceChildren(
      ...courses.map((course) => {
        const open = el("button", {}, `${course.title}${course.published ? " (published)" : " (draft)"}`);
        open.addEventListener("click", () => void openCourse(course.id));
        return el("div", { class: "course-row" }, open);
      }),
    );
  }

  async function openCourse(courseId: string): Promise<void> {
    session.update({ courseId });
    const detail = await api.getCourse(courseId);
    editor.replaceChildren(...renderSections(detail));
  }

  function renderSections(detail: CourseDetail): HTMLElement[] {
    const publishStatus = el("div", { class: "status" });
    const publish = el("button", {}, "Publish");
    publish.addEventListener("click", async () => {
      try {
        await publishCourse(api, detail.id);
        publishStatus.replaceChildren("Published.");
        await refresh();
      } catch (err) {
        publishStatus.replaceChildren(errorBanner(err));
        if (err instanceof ApiError && Array.isArray(err.details)) {
          // surface the full validation report inline at the offending paths
          for (const violation of err.details as { path: string; message: string }[]) {
            const field = editor.querySelector(`[data-path="${violation.path}"]`);
            field?.parentElement?.append(el("div", { class: "field-error" }, violation.message));
          }
        }
      }
    });
    return [
      el("h2", {}, detail.title),
      publish,
      publishStatus,
      ...detail.sections.map((section, i) => sectionEditor(detail.id, section, i)),
    ];
  }

  function sectionEditor(courseId: string, section: SectionView, index: number): HTMLElement {
    const title = textField(`sections[${index}].title`, section.title);
    const summary = textField(`sections[${index}].summary`, section.summary);
    const scope = textField(`sections[${index}].scope`, section.scope);
    const goals = textField(`sections[${index}].learning_goals`, section.learning_goals.join("\n"));
    const status = el("div", { class: "status" });
    const save = el("button", {}, "Save section");
    save.addEventListener("click", async () => {
      status.replaceChildren();
      editor.querySelectorAll(".field-error").forEach((n) => n.remove());
      try {
        await api.updateSection(courseId, section.id, {
          title: title.value,
          summary: summary.value,
          scope: scope.value,
          learning_goals: goals.value.split("\n").filter((g) => g.trim() !== ""),
        });
        status.replaceChildren("Saved.");
      } catch (err) {
        status.replaceChildren(errorBanner(err));
      }
    });
    return el("fieldset", {},
      el("legend", {}, section.title),
      el("label", {}, "Title ", title),
      el("label", {}, "Summary ", summary),
      el("label", {}, "Scope ", scope),
      el("label", {}, "Learning goals (one per line) ", goals),
      ...section.subsections.map((sub) =>
        el("details", {}, el("summary", {}, sub.title), el("pre", {}, sub.body ?? "")),
      ),
      save,
      status,
    );
  }

  function textField(path: string, value: string): HTMLTextAreaElement {
    const field = el("textarea", { "data-path": path }) as HTMLTextAreaElement;
    field.value = value;
    return field;
  }

  container.append(el("label", {}, "Upload course (JSON or CSV) ", fileInput), uploadStatus, list, editor);
  await refresh();
}

// ---- student flow ----

export async function renderStudentCatalog(session: UiSession): Promise<void> {
  const { api } = session;
  const container = el("div", { class: "student" });
  root().replaceChildren(el("h1", {}, "Courses"), container);
  const { courses } = await api.listCourses();
  for (const course of courses) {
    const button = el("button", {}, "Personalize");
    button.addEventListener("click", () => renderPersonalizeDialog(session, course.id));
    container.append(el("div", { class: "course-row" },
      el("strong", {}, course.title), " — ", course.description, " ", button,
    ));
  }
}

function renderPersonalizeDialog(session: UiSession, courseId: string): void {
  const interests = el("input", { type: "text", "aria-label": "Your interests" }) as HTMLInputElement;
  const goals = el("input", { type: "text", "aria-label": "Your career goals" }) as HTMLInputElement;
  const status = el("div", { class: "status" });
  const submit = el("button", {}, "Personalize");
  submit.addEventListener("click", async () => {
    status.replaceChildren("Generating your personalized curriculum — this can take about two minutes…");
    submit.setAttribute("disabled", "");
    try {
      const curriculum = await personalizeAndAwait(session.api, courseId, interests.value, goals.value, {
        onUpdate: (job) => status.replaceChildren(
          `Generating your personalized curriculum (${job.state}) — this can take about two minutes…`,
        ),
      });
      session.update({ courseId, curriculumId: curriculum.id });
      renderCurriculumReview(session, curriculum);
    } catch (err) {
      submit.removeAttribute("disabled");
      const retry = el("button", {}, "Retry");
      retry.addEventListener("click", () => renderPersonalizeDialog(session, courseId));
      status.replaceChildren(errorBanner(err), retry);
    }
  });
  root().replaceChildren(
    el("h1", {}, "Personalize this course"),
    el("label", {}, "Interests ", interests),
    el("label", {}, "Career goals ", goals),
    submit,
    status,
  );
}

function renderCurriculumReview(session: UiSession, curriculum: Curriculum): void {
  const save = el("button", {}, "Save and Start Learning");
  const status = el("div", { class: "status" });
  save.addEventListener("click", async () => {
    try {
      await session.api.saveCurriculum(curriculum.id);
      await renderLearning(session, curriculum);
    } catch (err) {
      status.replaceChildren(errorBanner(err));
    }
  });
  root().replaceChildren(
    el("h1", {}, "Your personalized curriculum"),
    ...curriculum.entries.map((entry) =>
      el("section", {},
        el("h2", {}, entry.personalized_title),
        el("p", {}, entry.personalized_summary),
        el("p", { class: "theme" }, `Running example: ${entry.analogy_theme}`),
      ),
    ),
    save,
    status,
  );
}

async function renderLearning(session: UiSession, curriculum: Curriculum): Promise<void> {
  const { api } = session;
  const course = await api.getCourse(curriculum.course_id);
  const nav = el("nav", { class: "section-tree" });
  const main = el("main", { class: "content" });
  root().replaceChildren(el("h1", {}, course.title), el("div", { class: "learning" }, nav, main));

  for (const section of course.sections) {
    const entry = curriculum.entries.find((e) => e.section_id === section.id);
    const sectionNode = el("div", { class: "tree-section" }, el("strong", {}, entry?.personalized_title ?? section.title));
    for (const sub of section.subsections) {
      const link = el("button", { class: "tree-subsection" }, sub.title);
      link.addEventListener("click", async () => {
        main.replaceChildren(el("p", {}, "Generating this page for you…"));
        try {
          const content = await openSubsection(api, curriculum.id, section.id, sub.id);
          renderContent(session, main, content);
        } catch (err) {
          if (err instanceof ApiError && err.code === "version_mismatch") {
            const again = el("button", {}, "Personalize again");
            again.addEventListener("click", () => renderPersonalizeDialog(session, curriculum.course_id));
            main.replaceChildren(
              el("p", {}, "This course was updated since your curriculum was created."),
              again,
            );
          } else {
            main.replaceChildren(errorBanner(err));
          }
        }
      });
      sectionNode.append(link);
    }
    nav.append(sectionNode);
  }
}

function renderContent(session: UiSession, main: HTMLElement, content: Content): void {
  const body = el("article", { class: "markdown" });
  body.innerHTML = renderMarkdown(content.body); // renderMarkdown escapes all raw HTML
  main.replaceChildren(body);
  for (const practice of content.practices) {
    main.append(renderPractice(session, content.id, practice));
  }
}

function renderPractice(session: UiSession, contentId: string, practice: Content["practices"][number]): HTMLElement {
  const controller = new QuizController(session.api, contentId, practice);
  const name = `practice-${contentId}-${practice.id}`;
  const form = el("form", { class: "practice" });
  const stem = el("p", { class: "stem" });
  stem.innerHTML = renderMarkdown(practice.stem);
  const feedback = el("div", { class: "feedback", "aria-live": "polite" });
  const inputs: HTMLInputElement[] = [];

  practice.choices.forEach((choice, index) => {
    const input = el("input", { type: "radio", name, value: String(index) }) as HTMLInputElement;
    input.addEventListener("change", () => controller.select(index));
    inputs.push(input);
    form.append(el("label", { class: "choice" }, input, " ", escapeHtml(choice.text)));
  });

  const submit = el("button", { type: "submit" }, "Submit");
  form.append(submit, feedback);
  form.addEventListener("submit", async (event) => {
    event.preventDefault();
    try {
      const state = await controller.submit();
      feedback.replaceChildren(
        el("span", { class: state.phase === "correct" ? "correct" : "incorrect" }, state.feedback ?? ""),
      );
      if (state.locked) {
        submit.setAttribute("disabled", "");
        inputs.forEach((input) => input.setAttribute("disabled", ""));
      }
    } catch (err) {
      feedback.replaceChildren(errorBanner(err));
    }
  });
  return form;
}

// ---- bootstrap ----

export function start(): void {
  const session = UiSession.restore(window.location.origin, window.sessionStorage);
  const route = (s: UiSession) =>
    s.data.role === "teacher" ? void renderTeacherEditor(s) : void renderStudentCatalog(s);
  if (session !== null) route(session);
  else renderLogin(route);
}

if (typeof document !== "undefined" && document.getElementById("app") !== null) {
  start();
}
