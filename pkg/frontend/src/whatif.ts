/** Patient what-if explorer.
 *
 * Holds a profile draft plus attitude/evidence toggles; every edit
 * re-queries /v1/recommend and the ranked table re-renders from the
 * response. Two scenarios can be pinned side by side. Expected utilities
 * are never computed client-side.
 */

import type { ApiClient } from './api.js';
import type { RecommendResponse } from './types.js';

export const DEFAULT_RHO = 0.039;
export const RISK_SEEKING_RHO = 0.005;

export interface Scenario {
  name: string;
  profile: Record<string, string>;
  rho: number | null;
  priorOverride: number | null;
  response: RecommendResponse;
}

export class WhatIfController {
  profile: Record<string, string>;
  rho: number | null = null;
  priorOverride: number | null = null;
  last: RecommendResponse | null = null;
  pinned: Scenario[] = [];

  constructor(private readonly api: ApiClient,
              initialProfile: Record<string, string> = {}) {
    this.profile = { ...initialProfile };
  }

  async refresh(topK = 8): Promise<RecommendResponse> {
    const body: Record<string, unknown> = { topK };
    if (this.priorOverride !== null) {
      body.priorOverride = this.priorOverride;
    }
    body.evidence = { ...this.profile };
    if (this.rho !== null) {
      body.rho = this.rho;
    }
    this.last = await this.api.recommend(body);
    return this.last;
  }

  async setField(name: string, value: string | null): Promise<RecommendResponse> {
    if (value === null || value === '') {
      delete this.profile[name];
    } else {
      this.profile[name] = value;
    }
    return this.refresh();
  }

  async clearEvidence(): Promise<RecommendResponse> {
    this.profile = {};
    return this.refresh();
  }

  async toggleRiskSeeking(on: boolean): Promise<RecommendResponse> {
    this.rho = on ? RISK_SEEKING_RHO : null;
    return this.refresh();
  }

  async setPriorOverride(p: number | null): Promise<RecommendResponse> {
    this.priorOverride = p;
    return this.refresh();
  }

  topStrategy(): string | null {
    return this.last?.strategies[0]?.label ?? null;
  }

  pin(name: string): Scenario {
    if (this.last === null) throw new Error('nothing to pin yet');
    const scenario: Scenario = {
      name,
      profile: { ...this.profile },
      rho: this.rho,
      priorOverride: this.priorOverride,
      response: this.last,
    };
    this.pinned = [...this.pinned.slice(-1), scenario];  // keep at most two
    return scenario;
  }

  comparison(): [Scenario, Scenario] | null {
    return this.pinned.length === 2 ? [this.pinned[0], this.pinned[1]] : null;
  }
}
