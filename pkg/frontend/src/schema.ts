// Client-side mirror of the server's sampling-range schema. The widgets
// derive their legal bounds from this single document; /validate applies
// the same rules server-side.

export type RangePair = [number, number];

export interface RangeDef {
  key: RangeKey;
  label: string;
  unit: string;
  default: RangePair;
  /** Sliders span [floor, ceiling]; the ceiling is twice the default max. */
  floor: number;
  ceiling: number;
  integer: boolean;
}

export const RANGE_KEYS = [
  "translation_mm",
  "rotation_deg",
  "scaling_pct",
  "shear_pct",
  "warp_strength_mm",
  "warp_control_points",
  "crop_proportion_pct",
  "intensity_mean",
  "bias_drop_pct",
  "bias_control_points",
  "blur_sd_mm",
  "noise_sd_pct",
  "gamma",
  "downsample_factor",
] as const;

export type RangeKey = (typeof RANGE_KEYS)[number];

function def(
  key: RangeKey,
  label: string,
  unit: string,
  lo: number,
  hi: number,
  opts: { integer?: boolean; floor?: number } = {},
): RangeDef {
  // slider ceilings default to twice the starter maximum; signed ranges
  // mirror that on the negative side
  const floor = opts.floor ?? (lo < 0 ? 2 * lo : 0);
  return {
    key,
    label,
    unit,
    default: [lo, hi],
    floor,
    ceiling: 2 * hi,
    integer: opts.integer ?? false,
  };
}

export const RANGE_DEFS: readonly RangeDef[] = [
  def("translation_mm", "Translation", "mm", -30, 30),
  def("rotation_deg", "Rotation", "°", -30, 30),
  def("scaling_pct", "Scaling", "%", 90, 110, { floor: 50 }),
  def("shear_pct", "Shear", "%", 90, 110, { floor: 50 }),
  def("warp_strength_mm", "Warp strength", "mm", 0, 20),
  def("warp_control_points", "Warp control points", "a.u.", 2, 16, {
    integer: true,
    floor: 2,
  }),
  def("crop_proportion_pct", "Crop proportion", "%", 0, 20),
  def("intensity_mean", "Intensity mean", "a.u.", 0, 1),
  def("bias_drop_pct", "Bias drop", "%", 0, 50),
  def("bias_control_points", "Bias control points", "a.u.", 2, 4, {
    integer: true,
    floor: 2,
  }),
  def("blur_sd_mm", "Blur SD", "mm", 0, 2),
  def("noise_sd_pct", "Noise SD", "%", 0, 10),
  def("gamma", "Gamma", "a.u.", 0.5, 1.5, { floor: 0.1 }),
  def("downsample_factor", "Downsample factor", "a.u.", 1, 4, { floor: 1 }),
];

export const RANGE_BY_KEY: ReadonlyMap<RangeKey, RangeDef> = new Map(
  RANGE_DEFS.map((d) => [d.key, d]),
);

export function tableDefaults(): Record<RangeKey, RangePair> {
  const out = {} as Record<RangeKey, RangePair>;
  for (const d of RANGE_DEFS) out[d.key] = [...d.default] as RangePair;
  return out;
}

export const STAGES = [
  "spatial",
  "crop-mask",
  "mean-image",
  "bias",
  "blur",
  "noise",
  "gamma",
  "downsample",
  "mask",
  "clear-slices",
  "skullstrip",
] as const;

export type Stage = (typeof STAGES)[number];

export const PROBABILITY_KEYS = [
  "bias",
  "blur",
  "noise",
  "gamma",
  "downsample",
  "crop",
  "clear_slices",
  "skullstrip",
] as const;

export interface FieldError {
  field: string;
  message: string;
}

export interface ValidationResult {
  ok: boolean;
  errors: FieldError[];
}

/** Mirror of the server's /validate rules for a config override document. */
export function validateOverrides(overrides: {
  ranges?: Partial<Record<string, unknown>>;
  probabilities?: Partial<Record<string, unknown>>;
}): ValidationResult {
  const errors: FieldError[] = [];
  for (const [field, value] of Object.entries(overrides.ranges ?? {})) {
    const rangeDef = RANGE_BY_KEY.get(field as RangeKey);
    if (!rangeDef) {
      errors.push({ field, message: `unknown range ${field}` });
      continue;
    }
    if (
      !Array.isArray(value) ||
      value.length !== 2 ||
      !value.every((v) => typeof v === "number" && Number.isFinite(v))
    ) {
      errors.push({ field, message: `${field} must be a [low, high] pair` });
      continue;
    }
    const [lo, hi] = value as RangePair;
    if (lo > hi) {
      errors.push({
        field,
        message: `${field} range out of order: [${lo}, ${hi}]`,
      });
    }
    if (rangeDef.integer && (!Number.isInteger(lo) || !Number.isInteger(hi))) {
      errors.push({ field, message: `${field} bounds must be integers` });
    }
    if (lo < rangeDef.floor && rangeDef.floor >= 0) {
      errors.push({
        field,
        message: `${field} must stay at or above ${rangeDef.floor}`,
      });
    }
  }
  for (const [field, value] of Object.entries(
    overrides.probabilities ?? {},
  )) {
    if (!(PROBABILITY_KEYS as readonly string[]).includes(field)) {
      errors.push({ field, message: `unknown stage probability ${field}` });
      continue;
    }
    if (typeof value !== "number" || value < 0 || value > 1) {
      errors.push({ field, message: `${field} probability must lie in [0, 1]` });
    }
  }
  return { ok: errors.length === 0, errors };
}
