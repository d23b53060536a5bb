import { describe, expect, it } from "vitest";

import * as state from "../src/state.js";
import type { AnnotationsPayload, Box } from "../src/types.js";

function baseline(): AnnotationsPayload {
  return {
    records: [
      { uuid: "u1", label: "light", name: "light_01", box: [10, 10, 50, 50], score: 0.9 },
      { uuid: "u2", label: "fan", name: "fan_01", box: [100, 100, 160, 160], score: 0.8 },
    ],
    landmarks: [{ name: "window", box: [200, 10, 260, 80] }],
    confirmed: [],
  };
}

describe("edit state", () => {
  it("starts clean and mirrors the payload", () => {
    const s = state.fromAnnotations(baseline());
    expect(s.dirty).toBe(false);
    expect(state.toPayload(s)).toEqual(baseline());
  });

  it("moving a box marks dirty and round-trips through the payload", () => {
    let s = state.fromAnnotations(baseline());
    s = state.select(s, { kind: "record", index: 0 });
    const moved: Box = [50, 10, 90, 50]; // dragged 40 px right
    s = state.setBox(s, s.selected, moved);
    expect(s.dirty).toBe(true);
    expect(state.toPayload(s).records[0].box).toEqual(moved);
    // the other record is untouched
    expect(state.toPayload(s).records[1].box).toEqual(baseline().records[1].box);
  });

  it("does not alias boxes between state and payload", () => {
    const s = state.fromAnnotations(baseline());
    const payload = state.toPayload(s);
    payload.records[0].box[0] = 999;
    expect(s.records[0].box[0]).toBe(10);
  });

  it("adds records with no uuid (service assigns on save)", () => {
    let s = state.fromAnnotations(baseline());
    s = state.addRecord(s, "light", [300, 300, 340, 340]);
    expect(s.records).toHaveLength(3);
    expect(s.records[2].uuid).toBe("");
    expect(s.dirty).toBe(true);
    expect(s.selected).toEqual({ kind: "record", index: 2 });
  });

  it("rejects duplicate landmark names", () => {
    const s = state.fromAnnotations(baseline());
    expect(() => state.addLandmark(s, "window", [0, 0, 10, 10])).toThrow(/already exists/);
  });

  it("delete clears selection and confirmed membership", () => {
    let s = state.fromAnnotations(baseline());
    s = state.toggleConfirmed(s, "u1");
    expect(s.confirmed).toEqual(["u1"]);
    s = state.select(s, { kind: "record", index: 0 });
    s = state.deleteSelected(s);
    expect(s.records.map((r) => r.uuid)).toEqual(["u2"]);
    expect(s.confirmed).toEqual([]);
    expect(s.selected).toBe(null);
  });

  it("relabel changes label and provisional name", () => {
    let s = state.fromAnnotations(baseline());
    s = state.select(s, { kind: "record", index: 1 });
    s = state.relabelSelected(s, "heater");
    expect(s.records[1].label).toBe("heater");
  });

  it("toggling confirm on an unsaved record is a no-op", () => {
    let s = state.fromAnnotations(baseline());
    s = state.addRecord(s, "light", [1, 1, 5, 5]);
    const before = s.confirmed;
    s = state.toggleConfirmed(s, "");
    expect(s.confirmed).toBe(before);
  });
});
