// The alpha slider: 0 (texture) .. 1 (fidelity) in 0.05 steps.

import { ALPHA_STEP, clampAlpha } from "../state.js";

export interface AlphaSlider {
  root: HTMLElement;
  input: HTMLInputElement;
  setValue(alpha: number): void;
}

export function createAlphaSlider(
  doc: Document,
  onChange: (alpha: number) => void,
): AlphaSlider {
  const root = doc.createElement("div");
  root.className = "alpha-slider";

  const label = doc.createElement("label");
  label.textContent = "α";
  const input = doc.createElement("input");
  input.type = "range";
  input.min = "0";
  input.max = "1";
  input.step = String(ALPHA_STEP);
  input.value = "0.5";
  const readout = doc.createElement("span");
  readout.className = "alpha-readout";
  readout.textContent = "0.50";
  const hint = doc.createElement("div");
  hint.className = "alpha-hint";
  hint.textContent = "texture ← α → fidelity";

  input.addEventListener("input", () => {
    const alpha = clampAlpha(Number(input.value));
    readout.textContent = alpha.toFixed(2);
    onChange(alpha);
  });

  root.append(label, input, readout, hint);
  return {
    root,
    input,
    setValue(alpha: number) {
      input.value = String(alpha);
      readout.textContent = alpha.toFixed(2);
    },
  };
}
