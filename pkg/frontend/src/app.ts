/** Browser entry: wires upload, the sketch canvas, the result matrix, the
 * time view, and the guidance panel against a relaq service.
 */

import { ApiClient } from "./api.js";
import { applyCell, sortRowsByKind } from "./guidance.js";
import { MatrixView } from "./matrix.js";
import { QuerySequencer, snapOffset } from "./query.js";
import { SketchSession } from "./sketch.js";
import {
  alternativesView,
  occurrenceArea,
  overviewModel,
  resultZoom,
} from "./timeview.js";
import type {
  DatasetHandle,
  GuidancePayload,
  QuerySpec,
  ResultsPayload,
} from "./types.js";

interface AppState {
  handle: DatasetHandle | null;
  query: QuerySpec;
  lastResults: ResultsPayload | null;
  guidance: GuidancePayload | null;
  matrix: MatrixView | null;
  pendingCombine: string | null;
}

const api = new ApiClient("");
const sequencer = new QuerySequencer();

const state: AppState = {
  handle: null,
  query: { mode: "strict", timeboxes: [{ id: "A", offset: 0 }] },
  lastResults: null,
  guidance: null,
  matrix: null,
  pendingCombine: null,
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

async function runQuery(): Promise<void> {
  if (state.handle === null) return;
  const seq = sequencer.begin();
  const payload = await api.runQuery(state.handle.id, state.query);
  if (!sequencer.accept(seq)) {
    return; // superseded by a newer edit
  }
  state.lastResults = payload;
  state.matrix = new MatrixView(state.query, payload);
  renderMatrix();
  renderTimeView();
}

function renderMatrix(): void {
  const matrix = state.matrix;
  if (matrix === null) return;
  const table = el<HTMLTableElement>("matrix");
  table.innerHTML = "";
  const header = table.createTHead().insertRow();
  for (const column of matrix.columns) {
    const cell = header.insertCell();
    cell.textContent = `${column.id} (${column.columnType})`;
    cell.onclick = () => {
      matrix.clickSort(column.id);
      renderMatrix();
    };
    cell.ondblclick = () => {
      if (column.columnType !== "fragment") return;
      if (state.pendingCombine === null) {
        state.pendingCombine = column.id;
      } else {
        matrix.combine(state.pendingCombine, column.id);
        state.pendingCombine = null;
        renderMatrix();
      }
    };
  }
  const body = table.createTBody();
  for (const row of matrix.visibleRows()) {
    const tr = body.insertRow();
    for (const column of matrix.columns) {
      const value = row.cells[column.id];
      tr.insertCell().textContent =
        value === undefined ? "" : value.toFixed(3);
    }
  }
}

function renderTimeView(): void {
  const payload = state.lastResults;
  if (payload === null) return;
  const canvas = el<HTMLCanvasElement>("occurrence");
  const ctx = canvas.getContext("2d");
  if (ctx === null) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const points = occurrenceArea(
    payload.summary.occurrence,
    canvas.width,
    canvas.height,
  );
  ctx.beginPath();
  ctx.moveTo(0, canvas.height);
  for (const point of points) {
    ctx.lineTo(point.x, point.y);
  }
  ctx.lineTo(canvas.width, canvas.height);
  ctx.closePath();
  ctx.fillStyle = "rgba(70, 130, 180, 0.4)";
  ctx.fill();

  const list = el<HTMLUListElement>("alternatives");
  list.innerHTML = "";
  for (const box of state.query.timeboxes.filter((b) => b.name === undefined)) {
    for (const item of alternativesView(payload, box.id)) {
      const li = document.createElement("li");
      li.textContent = `${item.series} (${item.meanScore.toFixed(2)})`;
      li.style.opacity = String(item.opacity);
      li.onclick = () => {
        const target = state.query.timeboxes.find((b) => b.id === box.id);
        if (target !== undefined) {
          target.name = item.series;
          void runQuery();
        }
      };
      list.appendChild(li);
    }
  }

  const overview = el<HTMLPreElement>("overview");
  const model = overviewModel(state.query, payload);
  overview.textContent = model.edges
    .map(
      (edge) =>
        `${edge.source} -[${edge.kind} ${edge.meanStrength?.toFixed(2) ?? "-"} ` +
        `w=${edge.thicknessPx.toFixed(1)}px]-> ${edge.target}`,
    )
    .join("\n");

  const zoom = el<HTMLPreElement>("zoom");
  const first = payload.results[0];
  zoom.textContent =
    first === undefined
      ? "no results"
      : resultZoom(state.query, first)
          .map(
            (z) =>
              `${z.box.id}: ${z.fragment.series}` +
              ` [${z.fragment.start_time}, ${z.fragment.end_time}]` +
              ` degree ${z.fragment.degree.toFixed(2)}`,
          )
          .join("\n");
}

async function refreshGuidance(focus: string): Promise<void> {
  if (state.handle === null) return;
  state.guidance = await api.guidance(state.handle.id, state.query, focus);
  const panel = el<HTMLTableElement>("guidance");
  panel.innerHTML = "";
  const guidance = state.guidance;
  const header = panel.createTHead().insertRow();
  header.insertCell().textContent = "series";
  for (const kind of guidance.kinds) {
    const cell = header.insertCell();
    cell.textContent = kind;
    cell.onclick = () => {
      guidance.rows = sortRowsByKind(guidance, kind);
      void refreshGuidanceTable();
    };
  }
  await refreshGuidanceTable();

  async function refreshGuidanceTable(): Promise<void> {
    const body = panel.tBodies[0] ?? panel.createTBody();
    body.innerHTML = "";
    for (const row of guidance.rows) {
      const tr = body.insertRow();
      tr.insertCell().textContent = row.series;
      for (const kind of guidance.kinds) {
        const cell = row.cells[kind];
        const td = tr.insertCell();
        if (cell === null || cell === undefined) continue;
        td.textContent = cell.mean_strength.toFixed(2);
        td.style.opacity = String(Math.max(0.15, cell.confidence));
        td.onclick = () => {
          state.query = applyCell(state.query, cell);
          void runQuery();
        };
      }
    }
  }
}

function wireSketch(): void {
  const canvas = el<HTMLCanvasElement>("sketch");
  const params = state.handle?.params;
  const boxLength = params?.box_length ?? 8;
  const windowSymbols = Math.max(
    1,
    Math.round(boxLength / (params?.sampling_length ?? 1)),
  );
  const session = new SketchSession(boxLength, windowSymbols, {
    suggest: (prefix) => {
      const box = state.query.timeboxes[0];
      if (state.handle === null || box.name === undefined) return;
      void api
        .trendSuggestions(state.handle.id, box.name, prefix)
        .then((payload) => {
          session.setSuggestions(payload.suggestions);
          drawSketch();
        });
    },
    refreshQuery: () => {
      state.query.timeboxes[0].sketch = session.sketchSpec();
      void runQuery();
    },
  });

  const toBox = (event: MouseEvent): { x: number; y: number } => {
    const rect = canvas.getBoundingClientRect();
    return {
      x: ((event.clientX - rect.left) / rect.width) * boxLength,
      y: 1 - (event.clientY - rect.top) / rect.height,
    };
  };
  canvas.onclick = (event) => {
    const { x, y } = toBox(event);
    if (session.addPoint(x, y)) {
      drawSketch();
    }
  };
  el<HTMLButtonElement>("clear-sketch").onclick = () => {
    session.clear();
    drawSketch();
  };

  function drawSketch(): void {
    const ctx = canvas.getContext("2d");
    if (ctx === null) return;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    const px = (p: { x: number; y: number }) => ({
      x: (p.x / boxLength) * canvas.width,
      y: (1 - p.y) * canvas.height,
    });
    ctx.strokeStyle = "#333";
    ctx.setLineDash([]);
    ctx.beginPath();
    session.points.forEach((point, i) => {
      const { x, y } = px(point);
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.stroke();
    ctx.strokeStyle = "#888";
    ctx.setLineDash([4, 4]);
    for (const segment of session.overlay) {
      ctx.globalAlpha = Math.max(0.2, segment.ratio);
      ctx.beginPath();
      const from = px({ x: segment.fromX, y: segment.fromY });
      const to = px({ x: segment.toX, y: segment.toY });
      ctx.moveTo(from.x, from.y);
      ctx.lineTo(to.x, to.y);
      ctx.stroke();
    }
    ctx.globalAlpha = 1;
    ctx.setLineDash([]);
  }
}

function wireLagDrag(): void {
  const input = el<HTMLInputElement>("lag");
  input.onchange = () => {
    const sampling = state.handle?.params.sampling_length ?? 1;
    const box = state.query.timeboxes[1];
    if (box !== undefined) {
      box.offset = snapOffset(Number(input.value), sampling);
      input.value = String(box.offset);
      void runQuery();
    }
  };
}

async function upload(): Promise<void> {
  const dataFile = el<HTMLInputElement>("data-file").files?.[0];
  const configFile = el<HTMLInputElement>("config-file").files?.[0];
  const sampling = Number(el<HTMLInputElement>("sampling").value);
  const box = Number(el<HTMLInputElement>("box").value);
  if (dataFile === undefined || configFile === undefined) return;
  state.handle = await api.uploadDataset(dataFile, configFile, sampling, box);
  el<HTMLSpanElement>("dataset-id").textContent = state.handle.id;
  wireSketch();
  wireLagDrag();
}

export function start(): void {
  el<HTMLButtonElement>("upload").onclick = () => void upload();
  el<HTMLButtonElement>("run").onclick = () => void runQuery();
  el<HTMLButtonElement>("guide").onclick = () =>
    void refreshGuidance(state.query.timeboxes[0].id);
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", start);
}
