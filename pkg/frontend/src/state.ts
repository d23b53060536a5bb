// Annotation edit state: a local mirror of GET /annotations plus dirty
// tracking and a selection. All transitions are pure so the editor's
// behavior is testable without a DOM.

import type { AnnotationsPayload, Box, LandmarkPayload, RecordPayload } from "./types.js";

export type Selection =
  | { kind: "record"; index: number }
  | { kind: "landmark"; index: number }
  | null;

export interface EditState {
  records: RecordPayload[];
  landmarks: LandmarkPayload[];
  confirmed: string[];
  dirty: boolean;
  selected: Selection;
}

export function fromAnnotations(payload: AnnotationsPayload): EditState {
  return {
    records: payload.records.map((r) => ({ ...r, box: [...r.box] as Box })),
    landmarks: payload.landmarks.map((l) => ({ ...l, box: [...l.box] as Box })),
    confirmed: [...payload.confirmed],
    dirty: false,
    selected: null,
  };
}

export function toPayload(state: EditState): AnnotationsPayload {
  return {
    records: state.records.map((r) => ({ ...r, box: [...r.box] as Box })),
    landmarks: state.landmarks.map((l) => ({ ...l, box: [...l.box] as Box })),
    confirmed: [...state.confirmed],
  };
}

export function select(state: EditState, selected: Selection): EditState {
  return { ...state, selected };
}

export function setBox(state: EditState, selected: Selection, box: Box): EditState {
  if (!selected) return state;
  if (selected.kind === "record") {
    const records = state.records.map((r, i) =>
      i === selected.index ? { ...r, box: [...box] as Box } : r,
    );
    return { ...state, records, dirty: true };
  }
  const landmarks = state.landmarks.map((l, i) =>
    i === selected.index ? { ...l, box: [...box] as Box } : l,
  );
  return { ...state, landmarks, dirty: true };
}

export function addRecord(state: EditState, label: string, box: Box): EditState {
  const record: RecordPayload = {
    uuid: "",
    label,
    name: label, // provisional; the service re-runs naming on save
    box: [...box] as Box,
    score: 1.0,
  };
  return {
    ...state,
    records: [...state.records, record],
    dirty: true,
    selected: { kind: "record", index: state.records.length },
  };
}

export function addLandmark(state: EditState, name: string, box: Box): EditState {
  if (state.landmarks.some((l) => l.name === name)) {
    throw new Error(`landmark ${name} already exists`);
  }
  return {
    ...state,
    landmarks: [...state.landmarks, { name, box: [...box] as Box }],
    dirty: true,
    selected: { kind: "landmark", index: state.landmarks.length },
  };
}

export function deleteSelected(state: EditState): EditState {
  const sel = state.selected;
  if (!sel) return state;
  if (sel.kind === "record") {
    const doomed = state.records[sel.index];
    return {
      ...state,
      records: state.records.filter((_, i) => i !== sel.index),
      confirmed: state.confirmed.filter((u) => u !== doomed.uuid),
      dirty: true,
      selected: null,
    };
  }
  return {
    ...state,
    landmarks: state.landmarks.filter((_, i) => i !== sel.index),
    dirty: true,
    selected: null,
  };
}

export function relabelSelected(state: EditState, label: string): EditState {
  const sel = state.selected;
  if (!sel || sel.kind !== "record") return state;
  const records = state.records.map((r, i) =>
    i === sel.index ? { ...r, label, name: label } : r,
  );
  return { ...state, records, dirty: true };
}

// Confirmed records keep their uuid across detection refreshes; toggling
// an unsaved (uuid-less) record is a no-op.
export function toggleConfirmed(state: EditState, uuid: string): EditState {
  if (!uuid || !state.records.some((r) => r.uuid === uuid)) return state;
  const confirmed = state.confirmed.includes(uuid)
    ? state.confirmed.filter((u) => u !== uuid)
    : [...state.confirmed, uuid].sort();
  return { ...state, confirmed, dirty: true };
}

export function selectedBox(state: EditState): Box | null {
  const sel = state.selected;
  if (!sel) return null;
  return sel.kind === "record"
    ? state.records[sel.index]?.box ?? null
    : state.landmarks[sel.index]?.box ?? null;
}
