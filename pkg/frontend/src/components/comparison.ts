// Original-vs-restored viewer: side-by-side panes or a draggable wipe.
// Both layers render at identical size so the wipe stays pixel-aligned
// at any zoom.

import type { ComparisonMode } from "../state.js";

export interface ComparisonView {
  root: HTMLElement;
  setImages(originalB64: string, restoredB64: string): void;
  setMode(mode: ComparisonMode): void;
  setWipe(percent: number): void;
  setZoom(factor: number): void;
  readonly warning: HTMLElement;
}

function dataUrl(b64: string): string {
  return `data:image/png;base64,${b64}`;
}

async function imageSize(b64: string): Promise<{ w: number; h: number } | null> {
  if (typeof Image === "undefined") return null;
  return new Promise((resolve) => {
    const img = new Image();
    img.onload = () => resolve({ w: img.naturalWidth, h: img.naturalHeight });
    img.onerror = () => resolve(null);
    img.src = dataUrl(b64);
  });
}

export function createComparison(doc: Document): ComparisonView {
  const root = doc.createElement("div");
  root.className = "comparison";

  const stage = doc.createElement("div");
  stage.className = "comparison-stage";
  const originalImg = doc.createElement("img");
  originalImg.className = "layer original";
  originalImg.alt = "original";
  const restoredImg = doc.createElement("img");
  restoredImg.className = "layer restored";
  restoredImg.alt = "restored";
  stage.append(originalImg, restoredImg);

  const warning = doc.createElement("div");
  warning.className = "comparison-warning";
  warning.hidden = true;

  root.append(stage, warning);

  let mode: ComparisonMode = "side-by-side";
  let wipePercent = 50;

  function applyMode(): void {
    stage.classList.toggle("wipe", mode === "wipe-slider");
    stage.classList.toggle("side-by-side", mode === "side-by-side");
    if (mode === "wipe-slider") {
      // restored on top, revealed from the left edge up to the wipe line
      restoredImg.style.clipPath = `inset(0 ${100 - wipePercent}% 0 0)`;
    } else {
      restoredImg.style.clipPath = "";
    }
  }

  return {
    root,
    warning,
    setImages(originalB64, restoredB64) {
      originalImg.src = dataUrl(originalB64);
      restoredImg.src = dataUrl(restoredB64);
      void Promise.all([imageSize(originalB64), imageSize(restoredB64)]).then(
        ([a, b]) => {
          const mismatch = a !== null && b !== null && (a.w !== b.w || a.h !== b.h);
          warning.hidden = !mismatch;
          if (mismatch) {
            warning.textContent = `size mismatch (${a!.w}x${a!.h} vs ${b!.w}x${b!.h}); showing side by side`;
            mode = "side-by-side";
            applyMode();
          }
        },
      );
      applyMode();
    },
    setMode(next) {
      mode = next;
      applyMode();
    },
    setWipe(percent) {
      wipePercent = Math.min(100, Math.max(0, percent));
      applyMode();
    },
    setZoom(factor) {
      stage.style.transform = `scale(${factor})`;
      stage.style.transformOrigin = "top left";
    },
  };
}
