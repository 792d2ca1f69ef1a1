/** SVG rendering of the parallel-coordinates plot. */

import {
  AxisState,
  SampleRow,
  axisMeans,
  downsample,
  visibleRows,
  yFor,
} from "./model.js";

export interface Layout {
  width: number;
  height: number;
  top: number;
  bottom: number;
  left: number;
  right: number;
}

export const DEFAULT_LAYOUT: Layout = {
  width: 1080,
  height: 460,
  top: 40,
  bottom: 420,
  left: 60,
  right: 1020,
};

const SVG_NS = "http://www.w3.org/2000/svg";

export function axisX(i: number, n: number, layout: Layout): number {
  if (n === 1) return (layout.left + layout.right) / 2;
  return layout.left + (i * (layout.right - layout.left)) / (n - 1);
}

function el(name: string, attrs: Record<string, string | number>): SVGElement {
  const node = document.createElementNS(SVG_NS, name);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, String(v));
  return node;
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(2);
  return v.toPrecision(4);
}

export interface RenderHooks {
  onHandleDrag?: (axisIndex: number, which: "lo" | "hi", clientY: number) => void;
  onHandleRelease?: () => void;
  onAxisReorder?: (from: number, to: number) => void;
  onAxisReset?: (axisIndex: number) => void;
}

/** Rebuild the whole SVG scene for the current axes and rows. */
export function renderPlot(
  svg: SVGSVGElement,
  axes: AxisState[],
  rows: SampleRow[],
  layout: Layout = DEFAULT_LAYOUT,
  hooks: RenderHooks = {},
): void {
  svg.innerHTML = "";
  svg.setAttribute("viewBox", `0 0 ${layout.width} ${layout.height}`);
  const n = axes.length;
  if (n === 0) return;

  const visible = visibleRows(rows, axes);
  const drawn = downsample(visible);
  const means = axisMeans(rows, axes);

  // polylines under everything else
  const lineGroup = el("g", { stroke: "#2b6cb0", "stroke-opacity": 0.35, fill: "none" });
  for (const row of drawn) {
    const pts = axes
      .map((axis, i) => {
        const x = axisX(i, n, layout);
        const y = yFor(axis, row[axis.name] as number, layout.top, layout.bottom);
        return `${x},${y}`;
      })
      .join(" ");
    lineGroup.appendChild(el("polyline", { points: pts, "stroke-width": 1 }));
  }
  svg.appendChild(lineGroup);

  axes.forEach((axis, i) => {
    const x = axisX(i, n, layout);
    const group = el("g", { "data-axis": axis.name });

    group.appendChild(
      el("line", {
        x1: x, y1: layout.top, x2: x, y2: layout.bottom,
        stroke: "#4a5568", "stroke-width": 1,
      }),
    );

    // shaded band outside the display bounds
    const yLo = yFor(axis, axis.displayLo, layout.top, layout.bottom);
    const yHi = yFor(axis, axis.displayHi, layout.top, layout.bottom);
    group.appendChild(
      el("rect", {
        x: x - 5, y: yHi, width: 10, height: Math.max(yLo - yHi, 0),
        fill: "#2b6cb0", "fill-opacity": 0.08,
      }),
    );

    // header (draggable for reorder, double-click resets bounds)
    const header = el("text", {
      x, y: layout.top - 18, "text-anchor": "middle",
      "font-size": 13, "font-family": "sans-serif", fill: "#1a202c",
      cursor: "grab",
    });
    header.textContent = axis.name;
    (header as any).draggable = true;
    header.addEventListener("dblclick", () => hooks.onAxisReset?.(i));
    header.addEventListener("mousedown", (ev) => {
      (ev.target as Element).setAttribute("data-drag-from", String(i));
    });
    header.addEventListener("mouseup", (ev) => {
      const fromAttr = document.querySelector("[data-drag-from]");
      if (fromAttr) {
        const from = Number(fromAttr.getAttribute("data-drag-from"));
        fromAttr.removeAttribute("data-drag-from");
        if (from !== i) hooks.onAxisReorder?.(from, i);
      }
      ev.stopPropagation();
    });
    group.appendChild(header);

    // numeric bound labels
    const loLabel = el("text", {
      x, y: layout.bottom + 16, "text-anchor": "middle",
      "font-size": 10, "font-family": "monospace", fill: "#4a5568",
    });
    loLabel.textContent = fmt(axis.displayLo);
    group.appendChild(loLabel);
    const hiLabel = el("text", {
      x, y: layout.top - 4, "text-anchor": "middle",
      "font-size": 10, "font-family": "monospace", fill: "#4a5568",
    });
    hiLabel.textContent = fmt(axis.displayHi);
    group.appendChild(hiLabel);

    // draggable endpoint handles
    for (const [which, y] of [["hi", yHi], ["lo", yLo]] as const) {
      const handle = el("rect", {
        x: x - 7, y: (y as number) - 4, width: 14, height: 8,
        rx: 2, fill: "#2c5282", cursor: "ns-resize",
        "data-handle": `${axis.name}:${which}`,
      });
      handle.addEventListener("mousedown", (ev) => {
        ev.preventDefault();
        const move = (mv: MouseEvent) => hooks.onHandleDrag?.(i, which, mv.clientY);
        const up = () => {
          window.removeEventListener("mousemove", move);
          window.removeEventListener("mouseup", up);
          hooks.onHandleRelease?.();
        };
        window.addEventListener("mousemove", move);
        window.addEventListener("mouseup", up);
      });
      group.appendChild(handle);
    }

    // mean-of-visible marker
    const mean = means[i];
    if (mean !== null && visible.length > 0) {
      const yMean = yFor(axis, mean, layout.top, layout.bottom);
      group.appendChild(
        el("circle", {
          cx: x, cy: yMean, r: 5,
          fill: "#dd6b20", stroke: "#7b341e", "stroke-width": 1,
          "data-mean": axis.name,
        }),
      );
    }

    svg.appendChild(group);
  });
}
