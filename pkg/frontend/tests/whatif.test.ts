import { describe, expect, it } from 'vitest';
import { riskLine, strategyTable } from '../src/render.js';
import type { RecommendResponse } from '../src/types.js';
import { WhatIfController } from '../src/whatif.js';
import { FixtureApi, loadFixture } from './fixtures.js';

const BENCHMARK: Record<string, string> = {
  sex: 'male', age: '44_54', sleep: 'normal', physical_activity: 'active',
  bmi: 'normal', smoking: 'non_smoker', alcohol: 'low',
  diabetes: 'no', hypertension: 'no', hypercholesterolemia: 'no',
};

describe('what-if explorer', () => {
  it('benchmark default recommends no screening', async () => {
    const explorer = new WhatIfController(new FixtureApi(), BENCHMARK);
    const response = await explorer.refresh();
    expect(explorer.topStrategy()).toBe('NoScreening');
    expect(response.pCrc).toBeCloseTo(0.00085, 6);
  });

  it('risk-attitude toggle flips the top strategy to FIT', async () => {
    const explorer = new WhatIfController(new FixtureApi(), BENCHMARK);
    await explorer.refresh();
    expect(explorer.topStrategy()).toBe('NoScreening');
    await explorer.toggleRiskSeeking(true);
    expect(explorer.topStrategy()).toBe('FIT+col-if-positive');
  });

  it('adding diabetes and hypertension flips the top strategy to sDNA', async () => {
    const explorer = new WhatIfController(new FixtureApi(), BENCHMARK);
    await explorer.refresh();
    explorer.profile.diabetes = 'yes';
    explorer.profile.hypertension = 'yes';
    const response = await explorer.refresh();
    expect(explorer.topStrategy()).toBe('sDNA+col-if-positive');
    expect(response.pCrc).toBeCloseTo(0.0039, 6);
  });

  it('renders only server-returned numbers', async () => {
    const fixture = loadFixture<RecommendResponse>('recommend_benchmark.json');
    const explorer = new WhatIfController(new FixtureApi(), BENCHMARK);
    const response = await explorer.refresh();
    const html = riskLine(response) + strategyTable(response);
    expect(html).toContain(fixture.pCrc.toFixed(6));
    for (const strategy of fixture.strategies) {
      expect(html).toContain(strategy.label);
      expect(html).toContain(strategy.expectedUtility.toFixed(3));
    }
  });

  it('branch EU columns mirror the response', async () => {
    const fixture = loadFixture<RecommendResponse>('recommend_benchmark_rho005.json');
    const html = strategyTable(fixture);
    const fit = fixture.strategies.find((s) => s.label === 'FIT+col-if-positive')!;
    const branch = fit.branchEUs.PredictedTrue;
    expect(html).toContain(`col ${branch.col.toFixed(3)}`);
    expect(html).toContain(`no-col ${branch.noCol.toFixed(3)}`);
  });

  it('pins two scenarios for side-by-side comparison', async () => {
    const explorer = new WhatIfController(new FixtureApi(), BENCHMARK);
    await explorer.refresh();
    explorer.pin('baseline');
    await explorer.toggleRiskSeeking(true);
    explorer.pin('risk seeking');
    const pair = explorer.comparison();
    expect(pair).not.toBeNull();
    const [a, b] = pair!;
    expect(a.response.strategies[0].label).toBe('NoScreening');
    expect(b.response.strategies[0].label).toBe('FIT+col-if-positive');
    expect(b.rho).toBe(0.005);
  });

  it('only talks to the recommend endpoint', async () => {
    const api = new FixtureApi();
    const explorer = new WhatIfController(api, BENCHMARK);
    await explorer.refresh();
    await explorer.toggleRiskSeeking(true);
    expect(new Set(api.calls)).toEqual(new Set(['recommend']));
  });
});
