/**
 * Pure state and filtering logic for the parallel-coordinates explorer.
 *
 * Axes carry both the job's data bounds (fixed) and draggable display
 * bounds; a sample's polyline is visible exactly when every plotted
 * coordinate lies inside its axis's display bounds. Mean markers are
 * recomputed over visible lines only. Everything here is side-effect
 * free so it can be property-tested against reference implementations.
 */

export interface SampleRow {
  [key: string]: number | string | boolean | null;
}

export interface BoxCoordDoc {
  name: string;
  lo: number;
  hi: number;
}

export interface AxisState {
  name: string;
  /** true for axes derived from results (divergence, mle) rather than box coordinates */
  derived: boolean;
  dataLo: number;
  dataHi: number;
  displayLo: number;
  displayHi: number;
}

export interface PlotState {
  jobId: string;
  axes: AxisState[];
  rows: SampleRow[];
}

export const DERIVED_AXES = ["divergence", "mle"];

/** Smallest allowed display-bound gap, as a fraction of the data range. */
export const MIN_GAP_FRACTION = 1e-3;

/** Hard cap on simultaneously drawn polylines; beyond it we thin evenly. */
export const VISIBLE_LINE_CAP = 5000;

function finite(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

/** Axis order: the job's box coordinates first, then derived result axes. */
export function buildAxes(box: BoxCoordDoc[], rows: SampleRow[]): AxisState[] {
  const axes: AxisState[] = box.map((c) => ({
    name: c.name,
    derived: false,
    dataLo: c.lo,
    dataHi: c.hi,
    displayLo: c.lo,
    displayHi: c.hi,
  }));
  for (const name of DERIVED_AXES) {
    const values = rows.map((r) => r[name]).filter(finite) as number[];
    let lo = Math.min(...values);
    let hi = Math.max(...values);
    if (!values.length || !Number.isFinite(lo) || !Number.isFinite(hi)) {
      lo = 0;
      hi = 1;
    }
    if (lo === hi) {
      lo -= 0.5;
      hi += 0.5;
    }
    axes.push({ name, derived: true, dataLo: lo, dataHi: hi, displayLo: lo, displayHi: hi });
  }
  return axes;
}

/** Refresh derived-axis data bounds as new rows stream in, preserving any
 * narrowing the user has applied. */
export function updateDerivedBounds(axes: AxisState[], rows: SampleRow[]): AxisState[] {
  return axes.map((axis) => {
    if (!axis.derived) return axis;
    const values = rows.map((r) => r[axis.name]).filter(finite) as number[];
    if (!values.length) return axis;
    let lo = Math.min(...values);
    let hi = Math.max(...values);
    if (lo === hi) {
      lo -= 0.5;
      hi += 0.5;
    }
    const untouched = axis.displayLo === axis.dataLo && axis.displayHi === axis.dataHi;
    return {
      ...axis,
      dataLo: lo,
      dataHi: hi,
      displayLo: untouched ? lo : Math.max(axis.displayLo, lo),
      displayHi: untouched ? hi : Math.min(axis.displayHi, hi),
    };
  });
}

/**
 * A row is visible iff every axis value is a finite number inside that
 * axis's display bounds (inclusive). Rows missing a value (failed records
 * have no usable top exponent) are hidden.
 */
export function isRowVisible(row: SampleRow, axes: AxisState[]): boolean {
  for (const axis of axes) {
    const v = row[axis.name];
    if (!finite(v)) return false;
    if (v < axis.displayLo || v > axis.displayHi) return false;
  }
  return true;
}

export function visibleRows(rows: SampleRow[], axes: AxisState[]): SampleRow[] {
  return rows.filter((r) => isRowVisible(r, axes));
}

/** Arithmetic mean of each axis's values over the visible rows; null when
 * nothing is visible. */
export function axisMeans(rows: SampleRow[], axes: AxisState[]): (number | null)[] {
  const visible = visibleRows(rows, axes);
  return axes.map((axis) => {
    if (!visible.length) return null;
    let acc = 0;
    for (const row of visible) acc += row[axis.name] as number;
    return acc / visible.length;
  });
}

/**
 * Move one display bound. The result keeps displayLo < displayHi by
 * clamping to a minimum gap, and never escapes the data bounds.
 */
export function dragBound(
  axis: AxisState,
  which: "lo" | "hi",
  value: number,
): AxisState {
  const gap = MIN_GAP_FRACTION * (axis.dataHi - axis.dataLo);
  let lo = axis.displayLo;
  let hi = axis.displayHi;
  if (which === "lo") {
    lo = Math.min(Math.max(value, axis.dataLo), hi - gap);
  } else {
    hi = Math.max(Math.min(value, axis.dataHi), lo + gap);
  }
  return { ...axis, displayLo: lo, displayHi: hi };
}

export function resetBounds(axis: AxisState): AxisState {
  return { ...axis, displayLo: axis.dataLo, displayHi: axis.dataHi };
}

/** Linear axis-value to pixel mapping over the fixed data bounds; larger
 * values sit higher (smaller y). */
export function yFor(axis: AxisState, value: number, top: number, bottom: number): number {
  const t = (value - axis.dataLo) / (axis.dataHi - axis.dataLo);
  return bottom - t * (bottom - top);
}

/** True when any axis has been strictly narrowed from its data bounds. */
export function anyAxisNarrowed(axes: AxisState[]): boolean {
  return axes.some(
    (a) => a.displayLo > a.dataLo || a.displayHi < a.dataHi,
  );
}

/**
 * The refine request body: current display bounds of the box-coordinate
 * axes (derived axes only filter the display; they are not search
 * coordinates).
 */
export function refineBox(axes: AxisState[]): BoxCoordDoc[] {
  return axes
    .filter((a) => !a.derived)
    .map((a) => ({ name: a.name, lo: a.displayLo, hi: a.displayHi }));
}

/** Evenly thin a list of indices down to the drawing cap. */
export function downsample<T>(items: T[], cap: number = VISIBLE_LINE_CAP): T[] {
  if (items.length <= cap) return items;
  const stride = Math.ceil(items.length / cap);
  const out: T[] = [];
  for (let i = 0; i < items.length; i += stride) out.push(items[i]);
  return out;
}

/** Swap two axes (drag-to-reorder on headers). */
export function reorderAxes(axes: AxisState[], from: number, to: number): AxisState[] {
  if (from === to || from < 0 || to < 0 || from >= axes.length || to >= axes.length) {
    return axes;
  }
  const next = axes.slice();
  const [moved] = next.splice(from, 1);
  next.splice(to, 0, moved);
  return next;
}
