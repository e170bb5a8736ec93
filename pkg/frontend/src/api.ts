import type {
  AnswerAccepted,
  CurvesResponse,
  DeviceBenchmarkResponse,
  ElicitationResult,
  JobStatus,
  JobSubmitted,
  PosteriorResponse,
  RecommendResponse,
  SessionStart,
} from './types.js';

export class ApiError extends Error {
  constructor(readonly status: number, readonly detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export interface RecommendRequest {
  evidence?: Record<string, string>;
  pCrc?: number;
  priorOverride?: number;
  rho?: number;
  topK?: number;
}

export interface AllocationRequest {
  population: string;
  limits?: Record<string, number>;
  runs?: number;
  seed?: number;
  rho?: number;
}

/** The full surface the UI is allowed to talk to. */
export interface ApiClient {
  posterior(evidence: Record<string, string>, priorOverride?: number): Promise<PosteriorResponse>;
  recommend(body: RecommendRequest): Promise<RecommendResponse>;
  startElicitation(): Promise<SessionStart>;
  answerPair(sessionId: string, questionIndex: number, preferred: string,
             indifferenceCost: number): Promise<AnswerAccepted>;
  answerPe(sessionId: string, questionIndex: number, peValue: number): Promise<AnswerAccepted>;
  elicitationResult(sessionId: string): Promise<ElicitationResult>;
  submitAllocation(body: AllocationRequest): Promise<JobSubmitted>;
  allocationStatus(jobId: string): Promise<JobStatus>;
  benchmarkDevice(device: Record<string, unknown>): Promise<DeviceBenchmarkResponse>;
  curves(methods: string[], points: number, pmin: number, pmax: number): Promise<CurvesResponse>;
}

export class HttpApiClient implements ApiClient {
  constructor(private readonly baseUrl: string = '') {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { 'Content-Type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json().catch(() => ({}));
    if (!response.ok) {
      throw new ApiError(response.status, String((payload as { detail?: string }).detail ?? response.statusText));
    }
    return payload as T;
  }

  posterior(evidence: Record<string, string>, priorOverride?: number): Promise<PosteriorResponse> {
    return this.request('POST', '/v1/posterior', { evidence, priorOverride });
  }

  recommend(body: RecommendRequest): Promise<RecommendResponse> {
    return this.request('POST', '/v1/recommend', body);
  }

  startElicitation(): Promise<SessionStart> {
    return this.request('POST', '/v1/elicitation/sessions', {});
  }

  answerPair(sessionId: string, questionIndex: number, preferred: string,
             indifferenceCost: number): Promise<AnswerAccepted> {
    return this.request('POST', `/v1/elicitation/sessions/${sessionId}/answers`,
                        { questionIndex, preferred, indifferenceCost });
  }

  answerPe(sessionId: string, questionIndex: number, peValue: number): Promise<AnswerAccepted> {
    return this.request('POST', `/v1/elicitation/sessions/${sessionId}/answers`,
                        { questionIndex, peValue });
  }

  elicitationResult(sessionId: string): Promise<ElicitationResult> {
    return this.request('GET', `/v1/elicitation/sessions/${sessionId}/result`);
  }

  submitAllocation(body: AllocationRequest): Promise<JobSubmitted> {
    return this.request('POST', '/v1/allocations', body);
  }

  allocationStatus(jobId: string): Promise<JobStatus> {
    return this.request('GET', `/v1/allocations/${jobId}`);
  }

  benchmarkDevice(device: Record<string, unknown>): Promise<DeviceBenchmarkResponse> {
    return this.request('POST', '/v1/devices/benchmark', { device });
  }

  curves(methods: string[], points: number, pmin: number, pmax: number): Promise<CurvesResponse> {
    const params = new URLSearchParams({
      methods: methods.join(','), points: String(points),
      pmin: String(pmin), pmax: String(pmax),
    });
    return this.request('GET', `/v1/curves/vinfo?${params}`);
  }
}
