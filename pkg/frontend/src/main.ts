// Wires the panel together: sample picker / upload, alpha slider with
// debounced single-in-flight requests, comparison viewer, metric chart,
// and the service status banner. All restoration comes from the service;
// nothing is computed locally.

import { ApiError, ServiceClient, type RestoreResponse, type SampleInfo } from "./api.js";
import { createBanner } from "./components/banner.js";
import { createChart } from "./components/chart.js";
import { createComparison } from "./components/comparison.js";
import { createAlphaSlider } from "./components/slider.js";
import { RequestScheduler } from "./scheduler.js";
import { SessionState, type ComparisonMode } from "./state.js";

export interface AppHandles {
  state: SessionState;
  client: ServiceClient;
  scheduler: RequestScheduler<RestoreResponse>;
  elements: {
    banner: ReturnType<typeof createBanner>;
    comparison: ReturnType<typeof createComparison>;
    chart: ReturnType<typeof createChart>;
    slider: ReturnType<typeof createAlphaSlider>;
    sampleList: HTMLElement;
    metrics: HTMLElement;
    status: HTMLElement;
  };
  setAlpha(alpha: number): void;
  selectSample(sample: SampleInfo): void;
  refreshSamples(): Promise<void>;
}

export function createApp(
  doc: Document,
  root: HTMLElement,
  client: ServiceClient,
  debounceMs = 250,
): AppHandles {
  const state = new SessionState();
  const scheduler = new RequestScheduler<RestoreResponse>(debounceMs);

  const banner = createBanner(doc);
  const comparison = createComparison(doc);
  const chart = createChart(doc);
  const metrics = doc.createElement("div");
  metrics.className = "metrics";
  const status = doc.createElement("div");
  status.className = "status";
  const sampleList = doc.createElement("div");
  sampleList.className = "samples";

  const slider = createAlphaSlider(doc, (alpha) => setAlpha(alpha));

  const modeRow = doc.createElement("div");
  modeRow.className = "mode-row";
  for (const mode of ["side-by-side", "wipe-slider"] as ComparisonMode[]) {
    const btn = doc.createElement("button");
    btn.textContent = mode;
    btn.dataset.mode = mode;
    btn.addEventListener("click", () => {
      state.comparisonMode = mode;
      comparison.setMode(mode);
    });
    modeRow.append(btn);
  }
  const wipe = doc.createElement("input");
  wipe.type = "range";
  wipe.min = "0";
  wipe.max = "100";
  wipe.value = "50";
  wipe.className = "wipe-position";
  wipe.addEventListener("input", () => comparison.setWipe(Number(wipe.value)));
  modeRow.append(wipe);

  const upload = doc.createElement("input");
  upload.type = "file";
  upload.accept = "image/png";
  upload.addEventListener("change", () => {
    const file = upload.files?.[0];
    if (!file) return;
    const reader = new FileReader();
    reader.onload = () => {
      const url = String(reader.result);
      state.selectUpload(url.slice(url.indexOf(",") + 1));
      requestRestore();
    };
    reader.readAsDataURL(file);
  });

  root.append(banner.root, sampleList, upload, slider.root, modeRow, comparison.root, metrics, chart.root, status);

  function renderMetrics(response: RestoreResponse): void {
    const m = response.metrics;
    metrics.textContent = m
      ? `PSNR ${m.psnr.toFixed(2)} dB | SSIM ${m.ssim.toFixed(4)} | ` +
        `perceptual ${m.lpips_proxy.toFixed(5)} | ${response.latency_ms.toFixed(0)} ms`
      : `${response.latency_ms.toFixed(0)} ms (no reference, metrics unavailable)`;
  }

  function requestRestore(): void {
    if (!state.hasSelection) return;
    const alpha = state.alpha;
    const req = state.sample
      ? { sample_id: state.sample.id, alpha }
      : { image: state.uploadedImage!, alpha };
    scheduler.schedule({
      run: () => client.restore(req),
      onDone: (response) => {
        banner.hide();
        state.recordResponse(response);
        comparison.setImages(state.sourceImage!, response.image);
        renderMetrics(response);
        chart.render(state.alphaHistory);
        status.textContent = `model ${response.model_id}`;
      },
      onError: (err) => {
        if (err instanceof ApiError) {
          banner.showError(`request rejected: ${err.message}`);
        } else {
          banner.showError("service unreachable", () => requestRestore());
        }
      },
    });
  }

  function setAlpha(alpha: number): void {
    state.setAlpha(alpha);
    slider.setValue(state.alpha);
    requestRestore();
  }

  function selectSample(sample: SampleInfo): void {
    state.selectSample(sample);
    for (const el of Array.from(sampleList.children)) {
      (el as HTMLElement).classList.toggle(
        "selected",
        (el as HTMLElement).dataset.id === sample.id,
      );
    }
    requestRestore();
  }

  async function refreshSamples(): Promise<void> {
    try {
      const samples = await client.samples();
      sampleList.textContent = "";
      for (const sample of samples) {
        const item = doc.createElement("button");
        item.className = "sample";
        item.dataset.id = sample.id;
        const img = doc.createElement("img");
        img.src = `data:image/png;base64,${sample.image}`;
        img.alt = sample.kind;
        const tag = doc.createElement("span");
        tag.textContent = sample.kind;
        item.append(img, tag);
        item.addEventListener("click", () => selectSample(sample));
        sampleList.append(item);
      }
      banner.hide();
    } catch {
      banner.showError("service unreachable", () => void refreshSamples());
    }
  }

  return {
    state,
    client,
    scheduler,
    elements: { banner, comparison, chart, slider, sampleList, metrics, status },
    setAlpha,
    selectSample,
    refreshSamples,
  };
}

export function boot(): void {
  const doc = document;
  const root = doc.getElementById("app");
  if (!root) throw new Error("missing #app mount point");
  const base = (root.dataset.serviceUrl ?? "").replace(/\/$/, "");
  const app = createApp(doc, root, new ServiceClient(base));
  void app.refreshSamples();
}

declare global {
  interface Window {
    __LATRES_NO_AUTOBOOT__?: boolean;
  }
}

if (typeof window !== "undefined" && !window.__LATRES_NO_AUTOBOOT__) {
  if (document.readyState === "loading") {
    document.addEventListener("DOMContentLoaded", boot);
  } else {
    boot();
  }
}
