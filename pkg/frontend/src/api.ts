// Typed client for the restoration service HTTP API.

export interface MetricsReport {
  psnr: number;
  ssim: number;
  lpips_proxy: number;
  hf_energy_gap: number;
}

export interface SampleInfo {
  id: string;
  kind: string;
  image: string; // base64 PNG
  reference: string | null;
}

export interface RestoreRequest {
  image?: string;
  sample_id?: string;
  alpha: number;
  reference?: string;
}

export interface RestoreResponse {
  image: string;
  alpha: number;
  latency_ms: number;
  model_id: string;
  metrics: MetricsReport | null;
}

export interface ModelInfo {
  model_id: string;
  stage: string;
  has_adapters: boolean;
  parameters: Record<string, number>;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

async function readError(res: Response): Promise<string> {
  try {
    const body = (await res.json()) as { detail?: string };
    return body.detail ?? res.statusText;
  } catch {
    return res.statusText;
  }
}

export class ServiceClient {
  constructor(readonly baseUrl: string = "") {}

  private async get<T>(path: string): Promise<T> {
    const res = await fetch(this.baseUrl + path);
    if (!res.ok) throw new ApiError(res.status, await readError(res));
    return (await res.json()) as T;
  }

  health(): Promise<{ status: string; model_loaded: boolean }> {
    return this.get("/api/health");
  }

  models(): Promise<ModelInfo[]> {
    return this.get("/api/models");
  }

  samples(): Promise<SampleInfo[]> {
    return this.get("/api/samples");
  }

  async restore(req: RestoreRequest, signal?: AbortSignal): Promise<RestoreResponse> {
    const res = await fetch(this.baseUrl + "/api/restore", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
      signal,
    });
    if (!res.ok) throw new ApiError(res.status, await readError(res));
    return (await res.json()) as RestoreResponse;
  }
}
