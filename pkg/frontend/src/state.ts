// Session state: what is selected, the current alpha, the last result,
// and the append-only history of (alpha, metrics) points.

import type { MetricsReport, RestoreResponse, SampleInfo } from "./api.js";

export type ComparisonMode = "side-by-side" | "wipe-slider";

export interface HistoryPoint {
  order: number;
  alpha: number;
  metrics: MetricsReport;
}

export const ALPHA_STEP = 0.05;

export function clampAlpha(value: number): number {
  const snapped = Math.round(value / ALPHA_STEP) * ALPHA_STEP;
  return Math.min(1, Math.max(0, Number(snapped.toFixed(2))));
}

export class SessionState {
  sample: SampleInfo | null = null;
  uploadedImage: string | null = null; // base64 PNG
  alpha = 0.5;
  lastResponse: RestoreResponse | null = null;
  comparisonMode: ComparisonMode = "side-by-side";
  private history: HistoryPoint[] = [];
  private counter = 0;

  selectSample(sample: SampleInfo): void {
    this.sample = sample;
    this.uploadedImage = null;
    this.lastResponse = null;
  }

  selectUpload(imageB64: string): void {
    this.uploadedImage = imageB64;
    this.sample = null;
    this.lastResponse = null;
  }

  get sourceImage(): string | null {
    return this.uploadedImage ?? this.sample?.image ?? null;
  }

  get hasSelection(): boolean {
    return this.sourceImage !== null;
  }

  setAlpha(value: number): void {
    this.alpha = clampAlpha(value);
  }

  recordResponse(response: RestoreResponse): void {
    this.lastResponse = response;
    if (response.metrics) {
      this.history.push({
        order: this.counter++,
        alpha: response.alpha,
        metrics: response.metrics,
      });
    }
  }

  /** Append-only view, ordered by request completion. */
  get alphaHistory(): readonly HistoryPoint[] {
    return this.history;
  }
}
