// The pivot explorer application. The server is stateless; this class keeps
// the pipeline client-side, issues exactly one /api/query per action, and
// re-renders the whole view from (schema, pipeline, last result) so a replay
// of the same pipeline reproduces the identical grid.

import {
  ApiClient,
  ApiRequestError,
  type CubeResult,
  type Format,
  type SchemaInfo,
} from "./api.js";
import { renderGrid } from "./grid.js";
import {
  addableDimensions,
  coarserLevels,
  finerLevels,
  initialPipeline,
  moveOrder,
  pullableMeasures,
  pushableAttributes,
  replay,
  type BaseOp,
  type DerivedState,
  type Op,
} from "./pipeline.js";

export class PivotApp {
  schema: SchemaInfo | null = null;
  pipeline: Op[] = [];
  result: CubeResult | null = null;
  split: number | null = null; // null: all axes on rows

  private queue: Promise<void> = Promise.resolve();
  private dragAxis: number | null = null;
  private dragMember: { axis: number; member: string } | null = null;

  constructor(
    readonly root: HTMLElement,
    readonly api: ApiClient,
  ) {}

  // -- lifecycle --------------------------------------------------------

  async start(): Promise<void> {
    this.root.innerHTML = "";
    try {
      this.schema = await this.api.getSchema();
    } catch (err) {
      this.renderConnectionError(String(err));
      return;
    }
    this.pipeline = initialPipeline(this.schema.fact_classes[0].id);
    this.result = await this.api.query(this.pipeline);
    this.render();
  }

  private renderConnectionError(message: string): void {
    this.root.innerHTML = "";
    const banner = document.createElement("div");
    banner.className = "banner error";
    banner.textContent = `cannot reach the warehouse API: ${message}`;
    const retry = document.createElement("button");
    retry.textContent = "retry";
    retry.addEventListener("click", () => void this.start());
    banner.appendChild(retry);
    this.root.appendChild(banner);
  }

  // -- actions ----------------------------------------------------------
  // every action runs through the queue (single in-flight query) and issues
  // exactly one POST /api/query; on a 400 the pipeline stays unchanged.

  private enqueue(work: () => Promise<void>): Promise<void> {
    this.queue = this.queue.then(work, work);
    return this.queue;
  }

  private async commit(next: Op[]): Promise<void> {
    try {
      this.result = await this.api.query(next);
      this.pipeline = next;
      this.render();
    } catch (err) {
      if (err instanceof ApiRequestError) {
        this.toast(
          err.opIndex === null
            ? `${err.code}: ${err.message}`
            : `op ${err.opIndex} rejected (${err.code}): ${err.message}`,
        );
        return;
      }
      throw err;
    }
  }

  applyOp(op: Op): Promise<void> {
    return this.enqueue(() => this.commit([...this.pipeline, op]));
  }

  /** Adding an axis edits the base op (the op grammar has no add-axis op);
   * still exactly one query. */
  addAxis(dimension: string, level: string): Promise<void> {
    return this.enqueue(() => {
      const base = this.pipeline[0] as BaseOp;
      const next: Op[] = [
        { ...base, axes: [...base.axes, { dimension, level }] },
        ...this.pipeline.slice(1),
      ];
      return this.commit(next);
    });
  }

  undo(): Promise<void> {
    return this.enqueue(() => {
      if (this.pipeline.length <= 1) return Promise.resolve();
      return this.commit(this.pipeline.slice(0, -1));
    });
  }

  stepTo(index: number): Promise<void> {
    return this.enqueue(() => this.commit(this.pipeline.slice(0, index + 1)));
  }

  toggleCube(label: string): Promise<void> {
    return this.enqueue(() => {
      const state = this.derived();
      const labels = new Set(state.cubeLabels);
      if (labels.has(label)) {
        labels.delete(label);
      } else {
        labels.add(label);
      }
      if (labels.size > 0) {
        return this.commit([
          ...this.pipeline,
          { op: "cube", axes: [...labels].sort() },
        ]);
      }
      // clearing the last cube axis is not expressible as an appended cube op;
      // drop the cube ops instead (still a single query)
      return this.commit(this.pipeline.filter((op) => op.op !== "cube"));
    });
  }

  rotateMove(from: number, to: number): Promise<void> {
    const count = this.derived().axes.length;
    return this.applyOp({ op: "rotate", order: moveOrder(count, from, to) });
  }

  switchMove(axisIndex: number, member: string, before: string): Promise<void> {
    const axis = this.result!.axes[axisIndex];
    const order = axis.coords.filter(
      (m) => !["*", "__unknown__", "__unassigned__"].includes(m) && m !== member,
    );
    const at = order.indexOf(before);
    if (at < 0) {
      order.push(member);
    } else {
      order.splice(at, 0, member);
    }
    return this.applyOp({ op: "switch", dimension: axis.label, members: order });
  }

  async exportText(format: Format | "xquery"): Promise<string> {
    if (format === "xquery") {
      return this.api.compile(this.pipeline);
    }
    return this.api.queryText(this.pipeline, format);
  }

  async download(format: Format | "xquery"): Promise<void> {
    const text = await this.exportText(format);
    const extension = format === "xquery" ? "xq" : format;
    const blob = new Blob([text], { type: "text/plain;charset=utf-8" });
    const anchor = document.createElement("a");
    anchor.href = URL.createObjectURL(blob);
    anchor.download = `result.${extension}`;
    anchor.click();
    URL.revokeObjectURL(anchor.href);
  }

  // -- derived state ------------------------------------------------------

  derived(): DerivedState {
    return replay(this.schema!, this.pipeline);
  }

  private effectiveSplit(): number {
    const n = this.result?.axes.length ?? 0;
    return this.split === null ? n : Math.min(this.split, n);
  }

  // -- rendering ----------------------------------------------------------

  toast(message: string): void {
    const area = this.root.querySelector(".toasts");
    if (!area) return;
    const note = document.createElement("div");
    note.className = "toast";
    note.textContent = message;
    area.appendChild(note);
    setTimeout(() => note.remove(), 6000);
  }

  render(): void {
    const schema = this.schema!;
    const state = this.derived();
    this.root.innerHTML = "";

    const toasts = document.createElement("div");
    toasts.className = "toasts";
    this.root.appendChild(toasts);

    const layout = document.createElement("div");
    layout.className = "layout";
    layout.appendChild(this.renderSchemaPanel(schema, state));
    layout.appendChild(this.renderMain(state));
    this.root.appendChild(layout);
  }

  private renderSchemaPanel(schema: SchemaInfo, state: DerivedState): HTMLElement {
    const panel = document.createElement("aside");
    panel.className = "schema-panel";

    const heading = document.createElement("h2");
    heading.textContent = `fact class: ${state.fact}`;
    panel.appendChild(heading);

    const measures = document.createElement("div");
    measures.className = "measures";
    measures.append("measures: ");
    for (const name of state.measures) {
      const chip = document.createElement("span");
      chip.className = "measure-chip";
      chip.textContent = name;
      if (pullableMeasures(state).includes(name)) {
        const pull = document.createElement("button");
        pull.textContent = "pull";
        pull.title = "turn this measure into an axis of its values";
        pull.addEventListener("click", () => void this.applyOp({ op: "pull", measure: name }));
        chip.appendChild(pull);
      }
      measures.appendChild(chip);
    }
    panel.appendChild(measures);

    const addable = addableDimensions(schema, state);
    const list = document.createElement("ul");
    list.className = "dimensions";
    for (const dimension of schema.dimensions) {
      const fact = schema.fact_classes.find((f) => f.id === state.fact)!;
      if (!fact.dimensions.includes(dimension.id)) continue;
      const item = document.createElement("li");
      const name = document.createElement("strong");
      name.textContent = dimension.id;
      item.appendChild(name);

      const ladder = document.createElement("span");
      ladder.className = "ladder";
      ladder.textContent = dimension.levels.map((l) => l.id).join(" < ");
      item.appendChild(ladder);

      if (addable.includes(dimension.id)) {
        for (const level of dimension.levels) {
          const add = document.createElement("button");
          add.className = "add-axis";
          add.textContent = `+${level.id}`;
          add.title = `add ${dimension.id} at ${level.id} as an axis`;
          add.addEventListener("click", () => void this.addAxis(dimension.id, level.id));
          item.appendChild(add);
        }
      }
      item.appendChild(this.renderSlicePicker(dimension.id));
      list.appendChild(item);
    }
    panel.appendChild(list);

    const pushes = pushableAttributes(schema, state);
    if (pushes.length) {
      const box = document.createElement("div");
      box.className = "push-box";
      box.append("push attribute: ");
      const select = document.createElement("select");
      for (const p of pushes) {
        const option = document.createElement("option");
        option.value = JSON.stringify(p);
        option.textContent = `${p.dimension}.${p.level}.${p.attribute}`;
        select.appendChild(option);
      }
      const go = document.createElement("button");
      go.textContent = "push";
      go.addEventListener("click", () => {
        const p = JSON.parse(select.value);
        void this.applyOp({ op: "push", ...p });
      });
      box.append(select, go);
      panel.appendChild(box);
    }
    return panel;
  }

  private renderSlicePicker(dimension: string): HTMLElement {
    const box = document.createElement("span");
    box.className = "slice-picker";
    const levelSelect = document.createElement("select");
    const schema = this.schema!;
    const levels = schema.dimensions.find((d) => d.id === dimension)?.levels ?? [];
    for (const level of levels) {
      const option = document.createElement("option");
      option.value = level.id;
      option.textContent = level.id;
      levelSelect.appendChild(option);
    }
    const memberSelect = document.createElement("select");
    memberSelect.className = "member-select";
    memberSelect.multiple = true;
    const load = async () => {
      const members = await this.api.getMembers(dimension, levelSelect.value);
      memberSelect.innerHTML = "";
      for (const member of members) {
        const option = document.createElement("option");
        option.value = member.id;
        option.textContent = member.id;
        memberSelect.appendChild(option);
      }
    };
    levelSelect.addEventListener("change", () => void load());
    levelSelect.addEventListener("focus", () => {
      if (!memberSelect.options.length) void load();
    });
    const sliceButton = document.createElement("button");
    sliceButton.textContent = "slice";
    sliceButton.title = "fix the dimension to one member";
    sliceButton.addEventListener("click", () => {
      const member = memberSelect.value;
      if (member) {
        void this.applyOp({
          op: "slice",
          dimension,
          level: levelSelect.value,
          member,
        });
      }
    });
    const diceButton = document.createElement("button");
    diceButton.textContent = "dice";
    diceButton.title = "restrict the dimension to the selected members";
    diceButton.addEventListener("click", () => {
      const members = [...memberSelect.selectedOptions].map((o) => o.value);
      if (members.length) {
        void this.applyOp({
          op: "dice",
          predicates: [{ dimension, level: levelSelect.value, members }],
        });
      }
    });
    box.append(levelSelect, memberSelect, sliceButton, diceButton);
    return box;
  }

  private renderMain(state: DerivedState): HTMLElement {
    const main = document.createElement("main");
    main.appendChild(this.renderAxisBar(state));
    const gridBox = document.createElement("div");
    gridBox.className = "grid-box";
    if (this.result) {
      const table = renderGrid(this.result, this.effectiveSplit());
      this.wireMemberDrag(table);
      gridBox.appendChild(table);
    }
    main.appendChild(gridBox);
    main.appendChild(this.renderHistory());
    main.appendChild(this.renderExportBar());
    return main;
  }

  private renderAxisBar(state: DerivedState): HTMLElement {
    const bar = document.createElement("div");
    bar.className = "axis-bar";
    bar.append("axes: ");
    state.axes.forEach((axis, index) => {
      const chip = document.createElement("span");
      chip.className = "axis-chip";
      chip.draggable = true;
      chip.dataset.index = String(index);
      chip.textContent = axis.level ? `${axis.label}.${axis.level}` : axis.label;
      chip.addEventListener("dragstart", () => {
        this.dragAxis = index;
      });
      chip.addEventListener("dragover", (event) => event.preventDefault());
      chip.addEventListener("drop", (event) => {
        event.preventDefault();
        if (this.dragAxis !== null && this.dragAxis !== index) {
          void this.rotateMove(this.dragAxis, index);
        }
        this.dragAxis = null;
      });

      for (const to of coarserLevels(this.schema!, axis)) {
        const up = document.createElement("button");
        up.textContent = `↑${to}`;
        up.title = `roll up to ${to}`;
        up.addEventListener("click", () =>
          void this.applyOp({ op: "rollup", dimension: axis.label, to_level: to }),
        );
        chip.appendChild(up);
      }
      for (const to of finerLevels(this.schema!, axis)) {
        const down = document.createElement("button");
        down.textContent = `↓${to}`;
        down.title = `drill down to ${to}`;
        down.addEventListener("click", () =>
          void this.applyOp({ op: "drilldown", dimension: axis.label, to_level: to }),
        );
        chip.appendChild(down);
      }
      const cube = document.createElement("button");
      cube.textContent = state.cubeLabels.has(axis.label) ? "cube✓" : "cube";
      cube.title = "toggle cube expansion over this axis";
      cube.addEventListener("click", () => void this.toggleCube(axis.label));
      chip.appendChild(cube);
      bar.appendChild(chip);
    });
    return bar;
  }

  private wireMemberDrag(table: HTMLTableElement): void {
    for (const th of table.querySelectorAll<HTMLTableCellElement>("th.row-header[data-member]")) {
      th.draggable = true;
      th.addEventListener("dragstart", () => {
        this.dragMember = {
          axis: Number(th.dataset.axis),
          member: th.dataset.member!,
        };
      });
      th.addEventListener("dragover", (event) => event.preventDefault());
      th.addEventListener("drop", (event) => {
        event.preventDefault();
        const source = this.dragMember;
        this.dragMember = null;
        if (
          source &&
          Number(th.dataset.axis) === source.axis &&
          th.dataset.member !== source.member
        ) {
          void this.switchMove(source.axis, source.member, th.dataset.member!);
        }
      });
    }
  }

  private renderHistory(): HTMLElement {
    const box = document.createElement("div");
    box.className = "history";
    box.append("pipeline: ");
    this.pipeline.forEach((op, index) => {
      const step = document.createElement("button");
      step.className = "history-step";
      step.textContent = describeOp(op);
      step.title = "step back to here";
      step.addEventListener("click", () => void this.stepTo(index));
      box.appendChild(step);
    });
    const undo = document.createElement("button");
    undo.className = "undo";
    undo.textContent = "undo";
    undo.disabled = this.pipeline.length <= 1;
    undo.addEventListener("click", () => void this.undo());
    box.appendChild(undo);
    return box;
  }

  private renderExportBar(): HTMLElement {
    const bar = document.createElement("div");
    bar.className = "export-bar";
    bar.append("export: ");
    for (const format of ["csv", "xml", "json", "xquery"] as const) {
      const button = document.createElement("button");
      button.textContent = format;
      button.disabled = this.result === null;
      button.addEventListener("click", () => void this.download(format));
      bar.appendChild(button);
    }
    return bar;
  }
}

export function describeOp(op: Op): string {
  switch (op.op) {
    case "base":
      return `base ${op.fact} [${op.axes.map((a) => `${a.dimension}.${a.level}`).join(", ")}]`;
    case "slice":
      return `slice ${op.dimension}=${op.member}`;
    case "dice":
      return `dice ${op.predicates.map((p) => p.dimension).join(",")}`;
    case "rollup":
      return `rollup ${op.dimension}→${op.to_level}`;
    case "drilldown":
      return `drilldown ${op.dimension}→${op.to_level}`;
    case "rotate":
      return `rotate [${op.order.join(",")}]`;
    case "switch":
      return `switch ${op.dimension}`;
    case "push":
      return `push ${op.dimension}.${op.level}.${op.attribute}`;
    case "pull":
      return `pull ${op.measure}`;
    case "cube":
      return `cube {${op.axes.join(",")}}`;
  }
}
