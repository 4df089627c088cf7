// Pipeline ops mirrored client-side, plus a replay that derives the current
// axis/measure state so the UI can enable exactly the actions whose
// preconditions hold. The server stays the source of truth for values; this
// mirror only reasons about structure.

import type { SchemaInfo } from "./api.js";

export const PULLED_PREFIX = "μ:";
export const ALL = "*";
export const UNKNOWN = "__unknown__";
export const UNASSIGNED = "__unassigned__";

export interface BaseOp {
  op: "base";
  fact: string;
  axes: { dimension: string; level: string }[];
  measures?: { name: string; aggregate: string }[];
}

export interface SliceOp {
  op: "slice";
  dimension: string;
  level: string;
  member: string;
}

export interface DiceOp {
  op: "dice";
  predicates: { dimension: string; level: string; members: string[] }[];
}

export interface RollupOp {
  op: "rollup";
  dimension: string;
  to_level: string;
}

export interface DrilldownOp {
  op: "drilldown";
  dimension: string;
  to_level: string;
}

export interface RotateOp {
  op: "rotate";
  order: number[];
}

export interface SwitchOp {
  op: "switch";
  dimension: string;
  members: string[];
}

export interface PushOp {
  op: "push";
  dimension: string;
  level: string;
  attribute: string;
}

export interface PullOp {
  op: "pull";
  measure: string;
}

export interface CubeOp {
  op: "cube";
  axes: string[];
}

export type Op =
  | BaseOp
  | SliceOp
  | DiceOp
  | RollupOp
  | DrilldownOp
  | RotateOp
  | SwitchOp
  | PushOp
  | PullOp
  | CubeOp;

export function initialPipeline(fact: string): Op[] {
  return [{ op: "base", fact, axes: [] }];
}

export interface AxisState {
  label: string; // dimension id, or μ:<measure> for pulled axes
  level: string | null;
}

export interface DerivedState {
  fact: string;
  axes: AxisState[];
  measures: string[];
  cubeLabels: Set<string>;
}

export function replay(schema: SchemaInfo, pipeline: Op[]): DerivedState {
  const base = pipeline[0] as BaseOp;
  const factClass = schema.fact_classes.find((f) => f.id === base.fact);
  if (!factClass) {
    throw new Error(`unknown fact class ${base.fact}`);
  }
  const state: DerivedState = {
    fact: base.fact,
    axes: base.axes.map((a) => ({ label: a.dimension, level: a.level })),
    measures: base.measures
      ? base.measures.map((m) => m.name)
      : factClass.measures.map((m) => m.name),
    cubeLabels: new Set(),
  };
  if (state.measures.length === 0) {
    state.measures = ["count"];
  }
  for (const op of pipeline.slice(1)) {
    applyToState(state, op);
  }
  return state;
}

function applyToState(state: DerivedState, op: Op): void {
  switch (op.op) {
    case "slice": {
      state.axes = state.axes.filter((a) => a.label !== op.dimension);
      state.cubeLabels.delete(op.dimension);
      break;
    }
    case "rollup":
    case "drilldown": {
      const axis = state.axes.find((a) => a.label === op.dimension);
      if (axis) {
        axis.level = op.to_level;
      }
      break;
    }
    case "rotate": {
      state.axes = op.order.map((i) => state.axes[i]);
      break;
    }
    case "push": {
      state.measures.push(`${op.dimension}.${op.level}.${op.attribute}`);
      break;
    }
    case "pull": {
      state.measures = state.measures.filter((m) => m !== op.measure);
      state.axes.push({ label: PULLED_PREFIX + op.measure, level: null });
      if (state.measures.length === 0) {
        state.measures = ["count"];
      }
      break;
    }
    case "cube": {
      state.cubeLabels = new Set(op.axes);
      break;
    }
    case "dice":
    case "switch":
    case "base":
      break;
  }
}

// -- action preconditions ----------------------------------------------------

function levelsOf(schema: SchemaInfo, dimension: string) {
  return schema.dimensions.find((d) => d.id === dimension)?.levels ?? [];
}

function depthOf(schema: SchemaInfo, dimension: string, level: string): number {
  return levelsOf(schema, dimension).find((l) => l.id === level)?.depth ?? 0;
}

export function coarserLevels(schema: SchemaInfo, axis: AxisState): string[] {
  if (axis.level === null) return [];
  const depth = depthOf(schema, axis.label, axis.level);
  return levelsOf(schema, axis.label)
    .filter((l) => l.depth > depth)
    .map((l) => l.id);
}

export function finerLevels(schema: SchemaInfo, axis: AxisState): string[] {
  if (axis.level === null) return [];
  const depth = depthOf(schema, axis.label, axis.level);
  return levelsOf(schema, axis.label)
    .filter((l) => l.depth < depth)
    .map((l) => l.id);
}

export function addableDimensions(schema: SchemaInfo, state: DerivedState): string[] {
  const fact = schema.fact_classes.find((f) => f.id === state.fact);
  const used = new Set(state.axes.map((a) => a.label));
  return (fact?.dimensions ?? []).filter((d) => !used.has(d));
}

export function pushableAttributes(
  schema: SchemaInfo,
  state: DerivedState,
): { dimension: string; level: string; attribute: string }[] {
  const fact = schema.fact_classes.find((f) => f.id === state.fact);
  const out: { dimension: string; level: string; attribute: string }[] = [];
  for (const dimension of fact?.dimensions ?? []) {
    for (const level of levelsOf(schema, dimension)) {
      for (const attribute of level.attributes) {
        if (attribute.type !== "integer" && attribute.type !== "decimal") continue;
        if (state.measures.includes(`${dimension}.${level.id}.${attribute.name}`)) continue;
        out.push({ dimension, level: level.id, attribute: attribute.name });
      }
    }
  }
  return out;
}

export function pullableMeasures(state: DerivedState): string[] {
  const labels = new Set(state.axes.map((a) => a.label));
  return state.measures.filter((m) => !labels.has(PULLED_PREFIX + m));
}

// rotate expressed as "move axis from position i to position j"
export function moveOrder(count: number, from: number, to: number): number[] {
  const order = Array.from({ length: count }, (_, i) => i);
  const [picked] = order.splice(from, 1);
  order.splice(to, 0, picked);
  return order;
}

export function isSentinel(member: string): boolean {
  return member === UNKNOWN || member === UNASSIGNED;
}
