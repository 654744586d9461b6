// Client-local tuner state. The UI never mutates server state; everything
// here lives in the browser session plus localStorage for the pinned
// gallery.

import {
  RangeKey,
  RangePair,
  RANGE_BY_KEY,
  Stage,
  tableDefaults,
  validateOverrides,
  ValidationResult,
} from "./schema.js";
import { PreviewResponse } from "./client.js";

export interface PinnedPreview {
  id: string;
  seed: number;
  labelId: string;
  stage: Stage | null;
  ranges: Record<RangeKey, RangePair>;
  imagePng: string;
  labelsPng: string;
  provenance: unknown;
}

export interface TunerState {
  ranges: Record<RangeKey, RangePair>;
  labelId: string | null;
  seed: number;
  sliceAxis: number | null;
  sliceIndex: number | null;
  /** Render the chain only up to this stage; null = full chain. */
  stageCutoff: Stage | null;
  /** Ranges pinned at max effect, remembering what they displaced. */
  maxEffect: Partial<Record<RangeKey, RangePair>>;
  overlayOpacity: number;
  gallery: PinnedPreview[];
}

export function initialState(): TunerState {
  return {
    ranges: tableDefaults(),
    labelId: null,
    seed: 0,
    sliceAxis: null,
    sliceIndex: null,
    stageCutoff: null,
    maxEffect: {},
    overlayOpacity: 0.5,
    gallery: [],
  };
}

/** Reset every slider to its starter default; max-effect pins are cleared. */
export function resetRanges(state: TunerState): TunerState {
  return { ...state, ranges: tableDefaults(), maxEffect: {} };
}

export function setRange(
  state: TunerState,
  key: RangeKey,
  lo: number,
  hi: number,
): TunerState {
  const maxEffect = { ...state.maxEffect };
  delete maxEffect[key]; // a manual edit releases the pin
  return { ...state, ranges: { ...state.ranges, [key]: [lo, hi] }, maxEffect };
}

/**
 * Pin a range at its maximum effect: both handles at the starter upper
 * bound b, per the "setting both sampling bounds" workflow. Toggling
 * again restores the range that was displaced.
 */
export function toggleMaxEffect(state: TunerState, key: RangeKey): TunerState {
  const def = RANGE_BY_KEY.get(key);
  if (!def) return state;
  const maxEffect = { ...state.maxEffect };
  const ranges = { ...state.ranges };
  if (key in maxEffect) {
    ranges[key] = maxEffect[key] as RangePair;
    delete maxEffect[key];
  } else {
    maxEffect[key] = ranges[key];
    ranges[key] = [def.default[1], def.default[1]];
  }
  return { ...state, ranges, maxEffect };
}

export function isMaxEffect(state: TunerState, key: RangeKey): boolean {
  return key in state.maxEffect;
}

export function newSeed(
  state: TunerState,
  roll: () => number = () => Math.floor(Math.random() * 2 ** 31),
): TunerState {
  return { ...state, seed: roll() };
}

/** Only ranges that differ from the defaults travel in the request. */
export function overridesDocument(state: TunerState): {
  ranges: Partial<Record<RangeKey, RangePair>>;
} {
  const defaults = tableDefaults();
  const ranges: Partial<Record<RangeKey, RangePair>> = {};
  for (const [key, pair] of Object.entries(state.ranges)) {
    const base = defaults[key as RangeKey];
    if (pair[0] !== base[0] || pair[1] !== base[1]) {
      ranges[key as RangeKey] = pair as RangePair;
    }
  }
  return { ranges };
}

export function validateState(state: TunerState): ValidationResult {
  return validateOverrides(overridesDocument(state));
}

/** A request may only leave the client when the overrides are valid. */
export function canRequest(state: TunerState): boolean {
  return state.labelId !== null && validateState(state).ok;
}

export function pinPreview(
  state: TunerState,
  response: PreviewResponse,
): TunerState {
  const pinned: PinnedPreview = {
    id: `${response.label_id}:${response.seed}:${response.stage ?? "full"}:${
      state.gallery.length
    }`,
    seed: response.seed,
    labelId: response.label_id,
    stage: (response.stage as Stage) ?? null,
    ranges: { ...state.ranges },
    imagePng: response.image_png,
    labelsPng: response.labels_png,
    provenance: response.provenance,
  };
  return { ...state, gallery: [...state.gallery, pinned] };
}

export function unpinPreview(state: TunerState, id: string): TunerState {
  return { ...state, gallery: state.gallery.filter((p) => p.id !== id) };
}

// Gallery persistence. Storage is injected so tests can fake localStorage.

export interface StringStorage {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

export const GALLERY_STORAGE_KEY = "voxsynth-ui.gallery";

export function saveGallery(state: TunerState, storage: StringStorage): void {
  storage.setItem(GALLERY_STORAGE_KEY, JSON.stringify(state.gallery));
}

export function loadGallery(
  state: TunerState,
  storage: StringStorage,
): TunerState {
  const raw = storage.getItem(GALLERY_STORAGE_KEY);
  if (raw === null) return state;
  try {
    const gallery = JSON.parse(raw) as PinnedPreview[];
    return { ...state, gallery };
  } catch {
    return state; // corrupt persistence never breaks the session
  }
}
