import type { ApiClient } from "./api.js";
import type { Job } from "./types.js";

export interface PollOptions {
  /** Interval for the first minute of polling. */
  intervalMs?: number;
  /** Interval after backoff kicks in. */
  backoffIntervalMs?: number;
  /** How long to poll at the fast interval before backing off. */
  backoffAfterMs?: number;
  /** Give up entirely after this long. */
  timeoutMs?: number;
  /** Progress callback invoked with every observed snapshot. */
  onUpdate?: (job: Job) => void;
  /** Injectable clock/sleep for tests. */
  sleep?: (ms: number) => Promise<void>;
  now?: () => number;
}

export class JobFailed extends Error {
  readonly job: Job;

  constructor(job: Job) {
    super(job.error ?? `job ${job.id} failed`);
    this.name = "JobFailed";
    this.job = job;
  }
}

const defaultSleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

/**
 * Poll a generation job until it reaches a terminal state. At most one
 * request is in flight at a time (each poll awaits the previous response).
 * Polls every 2 s, backing off to 5 s after the first minute; stops
 * immediately on succeeded/failed — no request leaks past a terminal state.
 */
export async function pollJob(api: ApiClient, jobId: string, options: PollOptions = {}): Promise<Job> {
  const intervalMs = options.intervalMs ?? 2000;
  const backoffIntervalMs = options.backoffIntervalMs ?? 5000;
  const backoffAfterMs = options.backoffAfterMs ?? 60_000;
  const timeoutMs = options.timeoutMs ?? 10 * 60_000;
  const sleep = options.sleep ?? defaultSleep;
  const now = options.now ?? Date.now;

  const start = now();
  for (;;) {
    const job = await api.getJob(jobId);
    options.onUpdate?.(job);
    if (job.state === "succeeded") return job;
    if (job.state === "failed") throw new JobFailed(job);
    const elapsed = now() - start;
    if (elapsed >= timeoutMs) {
      throw new Error(`timed out waiting for job ${jobId} after ${Math.round(elapsed / 1000)}s`);
    }
    await sleep(elapsed < backoffAfterMs ? intervalMs : backoffIntervalMs);
  }
}
