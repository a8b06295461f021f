// Non-blocking service status banner with a retry hook.

export interface Banner {
  root: HTMLElement;
  showError(message: string, onRetry?: () => void): void;
  showInfo(message: string): void;
  hide(): void;
}

export function createBanner(doc: Document): Banner {
  const root = doc.createElement("div");
  root.className = "banner";
  root.hidden = true;
  const text = doc.createElement("span");
  const retry = doc.createElement("button");
  retry.textContent = "retry";
  retry.hidden = true;
  root.append(text, retry);

  let retryHandler: (() => void) | null = null;
  retry.addEventListener("click", () => retryHandler?.());

  return {
    root,
    showError(message, onRetry) {
      root.hidden = false;
      root.className = "banner banner-error";
      text.textContent = message;
      retryHandler = onRetry ?? null;
      retry.hidden = !onRetry;
    },
    showInfo(message) {
      root.hidden = false;
      root.className = "banner banner-info";
      text.textContent = message;
      retry.hidden = true;
    },
    hide() {
      root.hidden = true;
    },
  };
}
