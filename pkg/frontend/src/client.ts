// Thin HTTP client for the preview server plus the debounce/cancellation
// policy for live sliders: edits settle for 300 ms before a request goes
// out, and a newer request aborts whatever is still in flight
// (last-write-wins).

import { RangeKey, RangePair, Stage } from "./schema.js";

export interface LabelInfo {
  id: string;
  label_count: number;
  shape: number[];
}

export interface PreviewRequest {
  label_id: string;
  overrides?: { ranges?: Partial<Record<RangeKey, RangePair>> };
  seed?: number;
  slice_axis?: number | null;
  slice_index?: number | null;
  stage?: Stage | null;
  max_effect?: string | null;
}

export interface PreviewResponse {
  label_id: string;
  seed: number;
  stage: string | null;
  slice_axis: number;
  slice_index: number;
  image_png: string;
  labels_png: string;
  provenance: Record<string, unknown>;
}

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    // field names arrive inside the server's detail string; surface verbatim
    super(detail);
    this.name = "ServiceError";
  }
}

type FetchLike = (
  url: string,
  init?: {
    method?: string;
    headers?: Record<string, string>;
    body?: string;
    signal?: AbortSignal;
  },
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export class PreviewClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = fetch as unknown as FetchLike,
  ) {}

  private async request(
    path: string,
    init?: Parameters<FetchLike>[1],
  ): Promise<unknown> {
    const resp = await this.fetchFn(this.baseUrl + path, init);
    const body = (await resp.json()) as { detail?: string };
    if (!resp.ok) {
      throw new ServiceError(resp.status, body.detail ?? "request failed");
    }
    return body;
  }

  async labels(): Promise<LabelInfo[]> {
    const body = (await this.request("/labels")) as { labels: LabelInfo[] };
    return body.labels;
  }

  async config(): Promise<Record<string, unknown>> {
    return (await this.request("/config")) as Record<string, unknown>;
  }

  async validate(overrides: object): Promise<void> {
    await this.request("/validate", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ overrides }),
    });
  }

  async preview(
    req: PreviewRequest,
    signal?: AbortSignal,
  ): Promise<PreviewResponse> {
    return (await this.request("/preview", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
      signal,
    })) as PreviewResponse;
  }
}

export const PREVIEW_DEBOUNCE_MS = 300;

export class DebouncedPreview {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inFlight: AbortController | null = null;
  private generation = 0;

  constructor(
    private readonly client: PreviewClient,
    private readonly onResult: (r: PreviewResponse) => void,
    private readonly onError: (e: ServiceError) => void,
    private readonly delayMs: number = PREVIEW_DEBOUNCE_MS,
  ) {}

  /** Schedule a preview; rapid successive calls collapse into one. */
  request(req: PreviewRequest): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.fire(req);
    }, this.delayMs);
  }

  private async fire(req: PreviewRequest): Promise<void> {
    this.inFlight?.abort();
    const controller = new AbortController();
    this.inFlight = controller;
    const generation = ++this.generation;
    try {
      const result = await this.client.preview(req, controller.signal);
      if (generation === this.generation) this.onResult(result);
    } catch (err) {
      if (controller.signal.aborted) return; // superseded, drop silently
      if (generation !== this.generation) return;
      if (err instanceof ServiceError) this.onError(err);
      else throw err;
    }
  }

  cancel(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
    this.inFlight?.abort();
    this.inFlight = null;
  }
}
