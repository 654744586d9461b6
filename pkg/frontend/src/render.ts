// Pure HTML-string views. Keeping the render layer free of DOM calls
// makes "same state, same bytes" a direct snapshot assertion and lets the
// suite run without a browser.

import { PreviewResponse } from "./client.js";
import { RangeDef, RANGE_DEFS, STAGES, Stage } from "./schema.js";
import { isMaxEffect, TunerState, validateState } from "./state.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function fmt(value: number): string {
  return Number.isInteger(value) ? String(value) : value.toFixed(2);
}

function sliderRow(
  state: TunerState,
  def: RangeDef,
  error: string | undefined,
): string {
  const [lo, hi] = state.ranges[def.key];
  const pinned = isMaxEffect(state, def.key);
  const step = def.integer ? 1 : (def.ceiling - def.floor) / 200;
  const handle = (which: "lo" | "hi", value: number) =>
    `<input type="range" class="handle-${which}" name="${def.key}.${which}" ` +
    `min="${def.floor}" max="${def.ceiling}" step="${step}" value="${value}">`;
  return [
    `<div class="range-row${error ? " invalid" : ""}" data-key="${def.key}">`,
    `  <label>${escapeHtml(def.label)} <span class="unit">` +
      `${escapeHtml(def.unit)}</span></label>`,
    `  ${handle("lo", lo)}`,
    `  ${handle("hi", hi)}`,
    `  <span class="values">[${fmt(lo)}, ${fmt(hi)}]</span>`,
    `  <button class="max-effect${pinned ? " active" : ""}" ` +
      `name="max.${def.key}">max</button>`,
    error ? `  <span class="error">${escapeHtml(error)}</span>` : null,
    `</div>`,
  ]
    .filter((line) => line !== null)
    .join("\n");
}

/** One dual-handle slider per starter range, with units as labeled. */
export function renderRangePanel(state: TunerState): string {
  const validation = validateState(state);
  const errorByField = new Map(
    validation.errors.map((e) => [e.field, e.message]),
  );
  const rows = RANGE_DEFS.map((def) =>
    sliderRow(state, def, errorByField.get(def.key)),
  );
  return [
    `<section class="range-panel">`,
    ...rows,
    `<button name="reset">Reset to defaults</button>`,
    `</section>`,
  ].join("\n");
}

function provenanceList(value: unknown, indent: string): string {
  if (value === null || typeof value !== "object") {
    return `${indent}<span class="value">${escapeHtml(String(value))}</span>`;
  }
  const entries = Array.isArray(value)
    ? value.map((v, i) => [String(i), v] as const)
    : Object.entries(value as Record<string, unknown>).sort(([a], [b]) =>
        a.localeCompare(b),
      );
  return entries
    .map(
      ([k, v]) =>
        `${indent}<dt>${escapeHtml(k)}</dt>\n` +
        `${indent}<dd>\n${provenanceList(v, indent + "  ")}\n${indent}</dd>`,
    )
    .join("\n");
}

function stageStepper(current: Stage | null): string {
  const buttons = STAGES.map((stage) => {
    const active = stage === current ? " active" : "";
    return (
      `  <button class="stage${active}" name="stage.${stage}">` +
      `${stage}</button>`
    );
  });
  const fullActive = current === null ? " active" : "";
  buttons.push(
    `  <button class="stage${fullActive}" name="stage.full">full</button>`,
  );
  return `<nav class="stage-stepper">\n${buttons.join("\n")}\n</nav>`;
}

/** Image slice, label overlay, provenance drawer, and the stage stepper. */
export function renderPreview(
  state: TunerState,
  response: PreviewResponse,
): string {
  return [
    `<section class="preview">`,
    stageStepper(state.stageCutoff),
    `<figure class="slice" data-axis="${response.slice_axis}" ` +
      `data-index="${response.slice_index}">`,
    `  <img class="image" src="data:image/png;base64,${response.image_png}">`,
    `  <img class="labels" style="opacity:${state.overlayOpacity}" ` +
      `src="data:image/png;base64,${response.labels_png}">`,
    `</figure>`,
    `<div class="controls">`,
    `  <button name="new-seed">New seed (${response.seed})</button>`,
    `  <button name="pin">Pin to gallery</button>`,
    `</div>`,
    `<details class="provenance"><summary>Sampled parameters</summary>`,
    `<dl>`,
    provenanceList(response.provenance, "  "),
    `</dl>`,
    `</details>`,
    `</section>`,
  ].join("\n");
}

export function renderServiceError(detail: string): string {
  return `<div class="service-error">${escapeHtml(detail)}</div>`;
}

export function renderGallery(state: TunerState): string {
  const cards = state.gallery.map((p) =>
    [
      `<figure class="pinned" data-id="${escapeHtml(p.id)}">`,
      `  <img src="data:image/png;base64,${p.imagePng}">`,
      `  <figcaption>seed ${p.seed}, ${p.stage ?? "full"}</figcaption>`,
      `  <button name="unpin.${escapeHtml(p.id)}">Unpin</button>`,
      `</figure>`,
    ].join("\n"),
  );
  return `<aside class="gallery">\n${cards.join("\n")}\n</aside>`;
}
