/**
 * Page wiring: load a sample-batch job, draw it, poll partial results,
 * filter by dragging axis bounds, and launch refine jobs on the narrowed
 * box. Network responses are applied last-write-wins per job id.
 */

import { getJob, getSamples, refineJob, JobDoc } from "./api.js";
import {
  AxisState,
  SampleRow,
  anyAxisNarrowed,
  buildAxes,
  dragBound,
  refineBox,
  reorderAxes,
  resetBounds,
  updateDerivedBounds,
  visibleRows,
} from "./model.js";
import { DEFAULT_LAYOUT, renderPlot } from "./render.js";

const POLL_MS = 1000;

interface UiState {
  jobId: string | null;
  job: JobDoc | null;
  axes: AxisState[];
  rows: SampleRow[];
  pollTimer: number | null;
}

const state: UiState = { jobId: null, job: null, axes: [], rows: [], pollTimer: null };

const svg = document.getElementById("plot") as unknown as SVGSVGElement;
const statusEl = document.getElementById("status") as HTMLElement;
const jobInput = document.getElementById("job-id") as HTMLInputElement;
const loadBtn = document.getElementById("load") as HTMLButtonElement;
const refineBtn = document.getElementById("refine") as HTMLButtonElement;
const resetBtn = document.getElementById("reset") as HTMLButtonElement;

function setStatus(text: string): void {
  statusEl.textContent = text;
}

function redraw(): void {
  renderPlot(svg, state.axes, state.rows, DEFAULT_LAYOUT, {
    onHandleDrag: (axisIndex, which, clientY) => {
      const rect = svg.getBoundingClientRect();
      const scale = (DEFAULT_LAYOUT.height) / rect.height;
      const y = (clientY - rect.top) * scale;
      const axis = state.axes[axisIndex];
      const t = (DEFAULT_LAYOUT.bottom - y) / (DEFAULT_LAYOUT.bottom - DEFAULT_LAYOUT.top);
      const value = axis.dataLo + t * (axis.dataHi - axis.dataLo);
      state.axes[axisIndex] = dragBound(axis, which, value);
      redraw();
    },
    onAxisReorder: (from, to) => {
      state.axes = reorderAxes(state.axes, from, to);
      redraw();
    },
    onAxisReset: (axisIndex) => {
      state.axes[axisIndex] = resetBounds(state.axes[axisIndex]);
      redraw();
    },
  });
  const visible = visibleRows(state.rows, state.axes).length;
  const progress = state.job
    ? `${state.job.progress.completed}/${state.job.progress.total} (${state.job.status})`
    : "";
  setStatus(`job ${state.jobId ?? "-"} ${progress} | ${visible}/${state.rows.length} lines visible`);
}

async function refresh(jobId: string): Promise<void> {
  const [job, rows] = await Promise.all([getJob(jobId), getSamples(jobId)]);
  if (state.jobId !== jobId) return; // a newer load superseded this response
  state.job = job;
  state.rows = rows;
  if (state.axes.length === 0) {
    state.axes = buildAxes(job.request?.box ?? [], rows);
  } else {
    state.axes = updateDerivedBounds(state.axes, rows);
  }
  redraw();
  if (job.status === "queued" || job.status === "running") {
    schedulePoll(jobId);
  }
}

function schedulePoll(jobId: string): void {
  if (state.pollTimer !== null) window.clearTimeout(state.pollTimer);
  state.pollTimer = window.setTimeout(() => {
    refresh(jobId).catch((err) => setStatus(`poll failed: ${err.message}`));
  }, POLL_MS);
}

async function loadJob(jobId: string): Promise<void> {
  state.jobId = jobId;
  state.axes = [];
  state.rows = [];
  state.job = null;
  try {
    await refresh(jobId);
  } catch (err: any) {
    setStatus(`load failed: ${err.message}`);
  }
}

loadBtn.addEventListener("click", () => {
  const id = jobInput.value.trim();
  if (id) void loadJob(id);
});

resetBtn.addEventListener("click", () => {
  state.axes = state.axes.map(resetBounds);
  redraw();
});

refineBtn.addEventListener("click", async () => {
  if (!state.jobId) return;
  if (!anyAxisNarrowed(state.axes)) {
    const sure = window.confirm(
      "No axis has been narrowed; refine will resample the full box. Continue?",
    );
    if (!sure) return;
  }
  try {
    const box = refineBox(state.axes);
    const childId = await refineJob(state.jobId, box);
    jobInput.value = childId;
    setStatus(`refine launched: ${childId}`);
    await loadJob(childId);
  } catch (err: any) {
    setStatus(`refine failed: ${err.message}`);
  }
});

const params = new URLSearchParams(window.location.search);
const initial = params.get("job");
if (initial) {
  jobInput.value = initial;
  void loadJob(initial);
} else {
  setStatus("enter a sample-batch job id to begin");
}
