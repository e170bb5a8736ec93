/** Strict fixture-backed ApiClient: every call must match a recorded
 * exchange, so a test passes only if the UI consumed genuine server
 * responses (no client-side recomputation possible). */

import { readFileSync } from 'node:fs';
import type { AllocationRequest, ApiClient, RecommendRequest } from '../src/api.js';
import { ApiError } from '../src/api.js';
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
} from '../src/types.js';

export function loadFixture<T>(name: string): T {
  const url = new URL(`../fixtures/${name}`, import.meta.url);
  return JSON.parse(readFileSync(url, 'utf-8')) as T;
}

interface ElicitationStep {
  request: { questionIndex: number; preferred?: string; indifferenceCost?: number;
             peValue?: number } | null;
  response: Record<string, unknown>;
}

export interface ElicitationFlow {
  steps: ElicitationStep[];
  result: ElicitationResult;
}

const BENCHMARK: Record<string, string> = {
  sex: 'male', age: '44_54', sleep: 'normal', physical_activity: 'active',
  bmi: 'normal', smoking: 'non_smoker', alcohol: 'low',
  diabetes: 'no', hypertension: 'no', hypercholesterolemia: 'no',
};

const sameEvidence = (a: Record<string, string>, b: Record<string, string>): boolean => {
  const ka = Object.keys(a).sort();
  const kb = Object.keys(b).sort();
  return ka.length === kb.length && ka.every((k, i) => k === kb[i] && a[k] === b[k]);
};

export class FixtureApi implements ApiClient {
  calls: string[] = [];
  private flow: ElicitationFlow = loadFixture('elicitation_flow.json');
  private step = 0;
  private jobPolls = 0;
  /** When set, the next pair answer fails with this error (validation path). */
  failNextAnswer: ApiError | null = null;

  async posterior(evidence: Record<string, string>): Promise<PosteriorResponse> {
    this.calls.push('posterior');
    if (sameEvidence(evidence, BENCHMARK)) {
      return loadFixture('posterior_benchmark.json');
    }
    throw new Error(`no posterior fixture for ${JSON.stringify(evidence)}`);
  }

  async recommend(body: RecommendRequest): Promise<RecommendResponse> {
    this.calls.push('recommend');
    const evidence = body.evidence ?? {};
    if (body.rho === 0.005 && sameEvidence(evidence, BENCHMARK)) {
      return loadFixture('recommend_benchmark_rho005.json');
    }
    if (body.rho === undefined && sameEvidence(evidence, BENCHMARK)) {
      return loadFixture('recommend_benchmark.json');
    }
    const added = { ...BENCHMARK, diabetes: 'yes', hypertension: 'yes' };
    if (body.rho === undefined && sameEvidence(evidence, added)) {
      return loadFixture('recommend_added_evidence.json');
    }
    throw new Error(`no recommend fixture for ${JSON.stringify(body)}`);
  }

  async startElicitation(): Promise<SessionStart> {
    this.calls.push('startElicitation');
    this.step = 1;
    return this.flow.steps[0].response as unknown as SessionStart;
  }

  private nextAnswer(expected: Record<string, unknown>): AnswerAccepted {
    const step = this.flow.steps[this.step];
    if (step === undefined || step.request === null) {
      throw new Error('answer beyond the recorded interview');
    }
    for (const [key, value] of Object.entries(expected)) {
      const recorded = (step.request as Record<string, unknown>)[key];
      if (recorded !== value) {
        throw new Error(
          `answer diverges from recording at step ${this.step}: ` +
          `${key}=${String(value)} (recorded ${String(recorded)})`);
      }
    }
    this.step += 1;
    return step.response as unknown as AnswerAccepted;
  }

  async answerPair(_sessionId: string, questionIndex: number, preferred: string,
                   indifferenceCost: number): Promise<AnswerAccepted> {
    this.calls.push('answerPair');
    if (this.failNextAnswer !== null) {
      const failure = this.failNextAnswer;
      this.failNextAnswer = null;
      throw failure;
    }
    return this.nextAnswer({ questionIndex, preferred, indifferenceCost });
  }

  async answerPe(_sessionId: string, questionIndex: number,
                 peValue: number): Promise<AnswerAccepted> {
    this.calls.push('answerPe');
    return this.nextAnswer({ questionIndex, peValue });
  }

  async elicitationResult(): Promise<ElicitationResult> {
    this.calls.push('elicitationResult');
    return this.flow.result;
  }

  async submitAllocation(body: AllocationRequest): Promise<JobSubmitted> {
    this.calls.push('submitAllocation');
    const recorded = loadFixture<{ submitted: JobSubmitted }>('allocation_job.json');
    if (!body.population) throw new ApiError(404, 'population file not found');
    return recorded.submitted;
  }

  async allocationStatus(jobId: string): Promise<JobStatus> {
    this.calls.push('allocationStatus');
    const recorded = loadFixture<{ submitted: JobSubmitted; final: JobStatus }>(
      'allocation_job.json');
    if (jobId !== recorded.submitted.jobId) {
      throw new ApiError(404, `no allocation job ${jobId}`);
    }
    this.jobPolls += 1;
    if (this.jobPolls < 2) {
      return { jobId, status: 'running' };
    }
    return recorded.final;
  }

  async benchmarkDevice(device: Record<string, unknown>): Promise<DeviceBenchmarkResponse> {
    this.calls.push('benchmarkDevice');
    if (device.id === 'Dev1') return loadFixture('device_dev1.json');
    throw new Error(`no device fixture for ${JSON.stringify(device)}`);
  }

  async curves(methods: string[]): Promise<CurvesResponse> {
    this.calls.push('curves');
    const fixture = loadFixture<CurvesResponse>('curves_fit_sdna_dev2.json');
    const out: CurvesResponse = {};
    for (const m of methods) {
      if (!(m in fixture)) throw new Error(`no curve fixture for ${m}`);
      out[m] = fixture[m];
    }
    return out;
  }
}
