// Pivot layout and DOM rendering for a cube result. Rendering is a pure
// function of (result, split): identical inputs produce identical DOM.

import type { CubeResult } from "./api.js";
import { ALL, isSentinel } from "./pipeline.js";

export interface PivotLayout {
  rowHeaders: string[][];
  colHeaders: string[][];
  body: (Record<string, number> | null)[][];
}

function headerTuples(coordLists: string[][]): string[][] {
  let headers: string[][] = [[]];
  for (const coords of coordLists) {
    const next: string[][] = [];
    for (const head of headers) {
      for (const coord of coords) {
        next.push([...head, coord]);
      }
    }
    headers = next;
  }
  return headers;
}

export function buildPivot(result: CubeResult, split: number): PivotLayout {
  const cells = new Map<string, Record<string, number>>();
  for (const cell of result.cells) {
    cells.set(JSON.stringify(cell.coord), cell.measures);
  }
  const rowHeaders = headerTuples(result.axes.slice(0, split).map((a) => a.coords));
  const colHeaders = headerTuples(result.axes.slice(split).map((a) => a.coords));
  const body = rowHeaders.map((row) =>
    colHeaders.map((col) => cells.get(JSON.stringify([...row, ...col])) ?? null),
  );
  return { rowHeaders, colHeaders, body };
}

function memberCell(tag: string, member: string): HTMLElement {
  const el = document.createElement(tag);
  el.textContent = member;
  if (isSentinel(member)) {
    el.classList.add("sentinel");
    el.title =
      member === ALL
        ? ""
        : "reserved coordinate: the fact reference was missing (__unknown__) " +
          "or the ragged hierarchy has no ancestor at this level (__unassigned__)";
  }
  if (member === ALL) {
    el.classList.add("all-token");
    el.title = "all members (cube expansion)";
  }
  return el;
}

export function renderGrid(result: CubeResult, split: number): HTMLTableElement {
  const layout = buildPivot(result, split);
  const table = document.createElement("table");
  table.className = "grid";

  const thead = document.createElement("thead");
  const colAxes = result.axes.slice(split);
  const rowAxes = result.axes.slice(0, split);
  const headRow = document.createElement("tr");
  for (const axis of rowAxes) {
    const th = document.createElement("th");
    th.className = "axis-name";
    th.textContent = axis.level ? `${axis.label}.${axis.level}` : axis.label;
    headRow.appendChild(th);
  }
  for (const col of layout.colHeaders) {
    const th = document.createElement("th");
    th.className = "col-header";
    if (col.length === 0) {
      th.textContent = colAxes.length === 0 ? "value" : "";
      headRow.appendChild(th);
      continue;
    }
    for (const member of col) {
      th.appendChild(memberCell("span", member));
    }
    th.dataset.coord = JSON.stringify(col);
    headRow.appendChild(th);
  }
  thead.appendChild(headRow);
  table.appendChild(thead);

  const tbody = document.createElement("tbody");
  layout.rowHeaders.forEach((row, r) => {
    const tr = document.createElement("tr");
    row.forEach((member, axisIndex) => {
      const th = memberCell("th", member);
      th.classList.add("row-header");
      th.dataset.axis = String(axisIndex);
      th.dataset.member = member;
      tr.appendChild(th);
    });
    if (row.length === 0) {
      const th = document.createElement("th");
      th.className = "row-header";
      th.textContent = rowAxes.length === 0 ? "total" : "";
      tr.appendChild(th);
    }
    layout.body[r].forEach((cell) => {
      const td = document.createElement("td");
      if (cell === null) {
        td.className = "empty";
        td.textContent = "";
      } else {
        td.textContent = result.measures.map((m) => String(cell[m])).join(" | ");
      }
      tr.appendChild(td);
    });
    tbody.appendChild(tr);
  });
  table.appendChild(tbody);
  return table;
}
