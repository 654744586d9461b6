// Browser entry point: wires the pure render/state layers to the DOM.
// Everything below is glue; the logic under test lives in the imported
// modules.

import {
  DebouncedPreview,
  PreviewClient,
  PreviewRequest,
  PreviewResponse,
} from "./client.js";
import {
  renderGallery,
  renderPreview,
  renderRangePanel,
  renderServiceError,
} from "./render.js";
import { RangeKey, Stage } from "./schema.js";
import {
  canRequest,
  initialState,
  loadGallery,
  newSeed,
  overridesDocument,
  pinPreview,
  resetRanges,
  saveGallery,
  setRange,
  toggleMaxEffect,
  TunerState,
  unpinPreview,
} from "./state.js";

export function startApp(root: HTMLElement, baseUrl: string): void {
  const client = new PreviewClient(baseUrl);
  let state: TunerState = loadGallery(initialState(), localStorage);
  let lastResponse: PreviewResponse | null = null;
  let lastError: string | null = null;

  const panel = document.createElement("div");
  const viewer = document.createElement("div");
  const gallery = document.createElement("div");
  root.append(panel, viewer, gallery);

  const debounced = new DebouncedPreview(
    client,
    (response) => {
      lastResponse = response;
      lastError = null;
      draw();
    },
    (err) => {
      lastError = err.detail;
      draw();
    },
  );

  function requestBody(): PreviewRequest {
    return {
      label_id: state.labelId as string,
      overrides: overridesDocument(state),
      seed: state.seed,
      slice_axis: state.sliceAxis,
      slice_index: state.sliceIndex,
      stage: state.stageCutoff,
    };
  }

  function update(next: TunerState): void {
    state = next;
    // invalid overrides render inline errors and never leave the client
    if (canRequest(state)) debounced.request(requestBody());
    draw();
  }

  function draw(): void {
    panel.innerHTML = renderRangePanel(state);
    viewer.innerHTML =
      (lastError ? renderServiceError(lastError) : "") +
      (lastResponse ? renderPreview(state, lastResponse) : "");
    gallery.innerHTML = renderGallery(state);
  }

  root.addEventListener("input", (ev) => {
    const target = ev.target as HTMLInputElement;
    const match = /^([a-z_]+)\.(lo|hi)$/.exec(target.name ?? "");
    if (!match) return;
    const key = match[1] as RangeKey;
    const [lo, hi] = state.ranges[key];
    const value = Number(target.value);
    update(
      match[2] === "lo"
        ? setRange(state, key, value, hi)
        : setRange(state, key, lo, value),
    );
  });

  root.addEventListener("click", (ev) => {
    const name = (ev.target as HTMLButtonElement).name ?? "";
    if (name === "reset") update(resetRanges(state));
    else if (name === "new-seed") update(newSeed(state));
    else if (name === "pin" && lastResponse) {
      state = pinPreview(state, lastResponse);
      saveGallery(state, localStorage);
      draw();
    } else if (name.startsWith("max.")) {
      update(toggleMaxEffect(state, name.slice(4) as RangeKey));
    } else if (name.startsWith("stage.")) {
      const stage = name.slice(6);
      update({
        ...state,
        stageCutoff: stage === "full" ? null : (stage as Stage),
      });
    } else if (name.startsWith("unpin.")) {
      state = unpinPreview(state, name.slice(6));
      saveGallery(state, localStorage);
      draw();
    }
  });

  void client.labels().then((labels) => {
    if (labels.length > 0) update({ ...state, labelId: labels[0].id });
  });
}
