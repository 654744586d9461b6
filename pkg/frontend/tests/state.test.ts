import { describe, expect, it } from "vitest";

import { PreviewResponse } from "../src/client.js";
import { tableDefaults } from "../src/schema.js";
import {
  canRequest,
  initialState,
  isMaxEffect,
  loadGallery,
  newSeed,
  overridesDocument,
  pinPreview,
  resetRanges,
  saveGallery,
  setRange,
  StringStorage,
  toggleMaxEffect,
  unpinPreview,
} from "../src/state.js";

import previewFull from "./fixtures/preview_full.json";

const response = previewFull.body as unknown as PreviewResponse;

function fakeStorage(): StringStorage & { data: Map<string, string> } {
  const data = new Map<string, string>();
  return {
    data,
    getItem: (k) => data.get(k) ?? null,
    setItem: (k, v) => void data.set(k, v),
  };
}

describe("range edits", () => {
  it("reset restores every slider to the starter defaults", () => {
    let state = initialState();
    state = setRange(state, "gamma", 0.9, 1.1);
    state = setRange(state, "translation_mm", -5, 5);
    state = toggleMaxEffect(state, "bias_drop_pct");
    state = resetRanges(state);
    expect(state.ranges).toEqual(tableDefaults());
    expect(state.maxEffect).toEqual({});
    expect(state.ranges).toMatchSnapshot("reset-state");
  });

  it("only edited ranges travel in the overrides document", () => {
    let state = initialState();
    expect(overridesDocument(state)).toEqual({ ranges: {} });
    state = setRange(state, "blur_sd_mm", 0, 1);
    expect(overridesDocument(state)).toEqual({
      ranges: { blur_sd_mm: [0, 1] },
    });
  });
});

describe("max-effect toggle", () => {
  it("pins both handles at the starter upper bound", () => {
    const state = toggleMaxEffect(initialState(), "bias_drop_pct");
    expect(state.ranges.bias_drop_pct).toEqual([50, 50]);
    expect(isMaxEffect(state, "bias_drop_pct")).toBe(true);
  });

  it("toggling off restores the displaced range", () => {
    let state = setRange(initialState(), "bias_drop_pct", 10, 20);
    state = toggleMaxEffect(state, "bias_drop_pct");
    expect(state.ranges.bias_drop_pct).toEqual([50, 50]);
    state = toggleMaxEffect(state, "bias_drop_pct");
    expect(state.ranges.bias_drop_pct).toEqual([10, 20]);
    expect(isMaxEffect(state, "bias_drop_pct")).toBe(false);
  });

  it("a manual edit releases the pin", () => {
    let state = toggleMaxEffect(initialState(), "gamma");
    state = setRange(state, "gamma", 0.8, 1.2);
    expect(isMaxEffect(state, "gamma")).toBe(false);
    expect(state.ranges.gamma).toEqual([0.8, 1.2]);
  });
});

describe("request gating", () => {
  it("requires a selected label map", () => {
    expect(canRequest(initialState())).toBe(false);
    expect(canRequest({ ...initialState(), labelId: "phantom" })).toBe(true);
  });

  it("crossed handles suppress requests", () => {
    let state = { ...initialState(), labelId: "phantom" };
    state = setRange(state, "gamma", 1.4, 0.6);
    expect(canRequest(state)).toBe(false);
  });
});

describe("seed control", () => {
  it("re-rolls with the provided source", () => {
    const state = newSeed(initialState(), () => 777);
    expect(state.seed).toBe(777);
  });
});

describe("pinned gallery", () => {
  it("pins carry image, provenance and the ranges that produced them", () => {
    const state = pinPreview(
      { ...initialState(), labelId: "phantom" },
      response,
    );
    expect(state.gallery).toHaveLength(1);
    expect(state.gallery[0].seed).toBe(response.seed);
    expect(state.gallery[0].imagePng).toBe(response.image_png);
    expect(state.gallery[0].provenance).toEqual(response.provenance);
  });

  it("unpin removes exactly the requested card", () => {
    let state = pinPreview(initialState(), response);
    state = pinPreview(state, { ...response, seed: 8 });
    const keep = state.gallery[1].id;
    state = unpinPreview(state, state.gallery[0].id);
    expect(state.gallery.map((p) => p.id)).toEqual([keep]);
  });

  it("survives a reload through storage", () => {
    const storage = fakeStorage();
    const before = pinPreview(initialState(), response);
    saveGallery(before, storage);
    const after = loadGallery(initialState(), storage); // fresh session
    expect(after.gallery).toEqual(before.gallery);
  });

  it("corrupt persistence falls back to an empty gallery", () => {
    const storage = fakeStorage();
    storage.setItem("voxsynth-ui.gallery", "{not json");
    expect(loadGallery(initialState(), storage).gallery).toEqual([]);
  });
});
