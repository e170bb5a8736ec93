/** Allocation dashboard: operational-limit form, job launch/polling,
 * count/confusion tables and information curves — all rendered from
 * service responses. */

import type { ApiClient } from './api.js';
import type { CurvesResponse, DeviceBenchmarkResponse, JobStatus } from './types.js';

export const TABLE9_DEFAULT_LIMITS: Record<string, number> = {
  Colonoscopy: 3000,
  gFOBT: 30000,
  FIT: 42000,
  BloodBased: 7000,
  sDNA: 6000,
  CTC: 2000,
  CC: 2000,
};

export const POLL_INTERVAL_MS = 1000;

type Sleep = (ms: number) => Promise<void>;

const realSleep: Sleep = (ms) => new Promise((resolve) => setTimeout(resolve, ms));

export class DashboardController {
  limits: Record<string, number> = { ...TABLE9_DEFAULT_LIMITS };
  job: JobStatus | null = null;
  curves: CurvesResponse | null = null;
  device: DeviceBenchmarkResponse | null = null;

  constructor(private readonly api: ApiClient,
              private readonly sleep: Sleep = realSleep) {}

  setLimit(intervention: string, count: number): void {
    if (!Number.isInteger(count) || count < 0) {
      throw new Error(`limit for ${intervention} must be a nonnegative integer`);
    }
    this.limits[intervention] = count;
  }

  async launch(population: string, runs: number, seed: number): Promise<JobStatus> {
    const submitted = await this.api.submitAllocation({
      population, limits: { ...this.limits }, runs, seed,
    });
    this.job = { jobId: submitted.jobId, status: submitted.status as JobStatus['status'] };
    while (this.job.status === 'queued' || this.job.status === 'running') {
      await this.sleep(POLL_INTERVAL_MS);
      this.job = await this.api.allocationStatus(submitted.jobId);
    }
    return this.job;
  }

  async loadCurves(methods: string[], points = 101, pmin = 0.001, pmax = 0.55): Promise<CurvesResponse> {
    this.curves = await this.api.curves(methods, points, pmin, pmax);
    return this.curves;
  }

  async checkDevice(device: Record<string, unknown>): Promise<DeviceBenchmarkResponse> {
    this.device = await this.api.benchmarkDevice(device);
    return this.device;
  }

  dominanceBanner(): string | null {
    if (this.device === null) return null;
    if (!this.device.dominated) return 'non-dominated';
    const deviceId = String(this.device.device.id ?? '');
    const dominators = this.device.findings
      .filter((f) => f.kind === 'dominated' && f.intervention === deviceId)
      .map((f) => f.by)
      .sort();
    return `dominated by ${dominators.join(', ')}`;
  }
}
