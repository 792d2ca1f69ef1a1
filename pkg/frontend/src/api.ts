/** Thin client for the job service HTTP API. */

import type { BoxCoordDoc, SampleRow } from "./model.js";

export interface JobDoc {
  id: string;
  kind: string;
  status: "queued" | "running" | "done" | "failed";
  progress: { completed: number; total: number };
  parent_id: string | null;
  error: string | null;
  request?: { box?: { name: string; lo: number; hi: number }[]; [key: string]: unknown };
}

export interface SystemDoc {
  id: string;
  dim: number;
  state_names: string[];
  params: { name: string; default: number; units: string }[];
  time_dependent: boolean;
}

async function asJson(resp: Response): Promise<any> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = await resp.json();
      detail = body.detail ?? detail;
    } catch {
      /* non-JSON error body */
    }
    throw new Error(`${resp.status}: ${detail}`);
  }
  return resp.json();
}

export async function getSystems(base = ""): Promise<SystemDoc[]> {
  return asJson(await fetch(`${base}/api/systems`));
}

export async function getJob(jobId: string, base = ""): Promise<JobDoc> {
  return asJson(await fetch(`${base}/api/jobs/${jobId}`));
}

export async function getSamples(jobId: string, base = ""): Promise<SampleRow[]> {
  return asJson(await fetch(`${base}/api/jobs/${jobId}/samples`));
}

export async function createJob(request: object, base = ""): Promise<string> {
  const doc = await asJson(
    await fetch(`${base}/api/jobs`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(request),
    }),
  );
  return doc.id;
}

export async function refineJob(
  jobId: string,
  box: BoxCoordDoc[],
  base = "",
): Promise<string> {
  const doc = await asJson(
    await fetch(`${base}/api/jobs/${jobId}/refine`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ box }),
    }),
  );
  return doc.id;
}

