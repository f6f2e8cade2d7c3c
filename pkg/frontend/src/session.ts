import { ApiClient, type FetchLike } from "./api.js";
import type { Role } from "./types.js";

const STORAGE_KEY = "tutorcraft.session";

export interface SessionData {
  token: string;
  role: Role;
  courseId?: string;
  curriculumId?: string;
  sectionId?: string;
}

/**
 * The logged-in user's session. The bearer token lives in memory and
 * (optionally) sessionStorage — it is never placed in a URL, so it cannot
 * leak through history, referrers, or server access logs.
 */
export class UiSession {
  readonly api: ApiClient;
  data: SessionData;
  private readonly storage: Storage | null;

  constructor(baseUrl: string, data: SessionData, storage: Storage | null = null, fetchFn?: FetchLike) {
    this.data = data;
    this.storage = storage;
    this.api = new ApiClient(baseUrl, data.token, fetchFn);
    this.persist();
  }

  static restore(baseUrl: string, storage: Storage, fetchFn?: FetchLike): UiSession | null {
    const raw = storage.getItem(STORAGE_KEY);
    if (raw === null) return null;
    try {
      const data = JSON.parse(raw) as SessionData;
      if (typeof data.token !== "string" || data.token === "") return null;
      return new UiSession(baseUrl, data, storage, fetchFn);
    } catch {
      return null;
    }
  }

  update(partial: Partial<SessionData>): void {
    this.data = { ...this.data, ...partial };
    this.persist();
  }

  logout(): void {
    this.storage?.removeItem(STORAGE_KEY);
  }

  private persist(): void {
    this.storage?.setItem(STORAGE_KEY, JSON.stringify(this.data));
  }
}
