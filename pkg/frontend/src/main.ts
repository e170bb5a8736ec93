/** Browser bootstrap: wires the three panels to the DOM.
 * One elicitation session per tab; wizard state mirrors the server and is
 * kept in sessionStorage so an abandoned interview can resume. */

import { ApiError, HttpApiClient } from './api.js';
import { DashboardController, TABLE9_DEFAULT_LIMITS } from './dashboard.js';
import {
  confusionTable,
  countsTable,
  curvesSvg,
  fmtEu,
  riskLine,
  strategyTable,
} from './render.js';
import type { PairQuestion, Question } from './types.js';
import { WhatIfController } from './whatif.js';
import { WizardController } from './wizard.js';

const BENCHMARK_PROFILE: Record<string, string> = {
  sex: 'male', age: '44_54', sleep: 'normal', physical_activity: 'active',
  bmi: 'normal', smoking: 'non_smoker', alcohol: 'low',
  diabetes: 'no', hypertension: 'no', hypercholesterolemia: 'no',
};

const PROFILE_FIELDS: Record<string, string[]> = {
  sex: ['male', 'female'],
  age: ['under_44', '44_54', '54_64', 'over_64'],
  sleep: ['normal', 'short', 'long'],
  physical_activity: ['active', 'inactive'],
  bmi: ['normal', 'overweight', 'obese'],
  smoking: ['non_smoker', 'ex_smoker', 'smoker'],
  alcohol: ['low', 'moderate', 'high'],
  diabetes: ['no', 'yes'],
  hypertension: ['no', 'yes'],
  hypercholesterolemia: ['no', 'yes'],
};

const WIZARD_STORAGE_KEY = 'crcscreen-wizard';

const $ = (id: string): HTMLElement => {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing element #${id}`);
  return el;
};

function showError(target: HTMLElement, err: unknown): void {
  const message = err instanceof ApiError ? err.detail : String(err);
  target.innerHTML = `<p class="error">${message}</p>`;
}

// ---------------------------------------------------------------- wizard --

function questionHtml(question: Question): string {
  if (question.kind === 'pair') {
    const opt = (o: PairQuestion['optionA']): string =>
      `${o.id} (info ${o.info}${o.cost === null ? '' : `, cost ${o.cost} €`})`;
    return `<p>Comfort level ${question.comfort}: which do you prefer?</p>` +
      `<label><input type="radio" name="preferred" value="${question.optionA.id}">` +
      ` ${opt(question.optionA)}</label><br>` +
      `<label><input type="radio" name="preferred" value="${question.optionB.id}">` +
      ` ${opt(question.optionB)}</label><br>` +
      `<label>Indifference cost (€): <input type="number" id="indiff" step="0.01"></label>`;
  }
  return `<p>Probability equivalent: best ${JSON.stringify(question.bestAnchor)}, ` +
    `worst ${JSON.stringify(question.worstAnchor)}, sure thing ${JSON.stringify(question.point)}.</p>` +
    `<label>PE value (0..1): <input type="number" id="pe" step="0.01" min="0" max="1"></label>`;
}

function setupWizard(api: HttpApiClient): void {
  let wizard = new WizardController(api);
  const stored = sessionStorage.getItem(WIZARD_STORAGE_KEY);
  if (stored !== null) {
    wizard = WizardController.restore(api, stored);
  }
  const panel = $('wizard-question');
  const status = $('wizard-status');

  const render = (): void => {
    sessionStorage.setItem(WIZARD_STORAGE_KEY, wizard.serialize());
    const { answered, total } = wizard.progress;
    status.textContent = total > 0 ? `${answered}/${total} answered` : '';
    const estimates = Object.entries(wizard.lambdaEstimates)
      .map(([lvl, ests]) => `λ̂ level ${lvl}: ${ests.map(fmtEu).join(', ')}`)
      .join(' · ');
    $('wizard-estimates').textContent = estimates;
    if (wizard.state.result !== null) {
      const r = wizard.state.result;
      const lambdas = Object.entries(r.lambdas)
        .map(([lvl, v]) => `λ${lvl} = ${v.toFixed(4)}`).join(', ');
      panel.innerHTML = `<p>${lambdas}</p>` +
        `<p>a = ${r.a.toFixed(6)}, b = ${r.b.toFixed(6)}, ρ = ${r.rho.toFixed(6)}</p>` +
        `<button id="download">Download transcript</button>`;
      $('download').addEventListener('click', () => {
        const blob = new Blob([JSON.stringify(wizard.transcript(), null, 1)],
                              { type: 'application/json' });
        const link = document.createElement('a');
        link.href = URL.createObjectURL(blob);
        link.download = 'elicitation_transcript.json';
        link.click();
      });
      return;
    }
    const question = wizard.state.current;
    if (question === null) {
      panel.innerHTML = '<button id="start">Start interview</button>';
      $('start').addEventListener('click', async () => {
        await wizard.start();
        render();
      });
      return;
    }
    panel.innerHTML = questionHtml(question) +
      '<br><button id="submit">Answer</button><span id="wizard-error" class="error"></span>';
    $('submit').addEventListener('click', async () => {
      try {
        if (question.kind === 'pair') {
          const preferred = panel.querySelector<HTMLInputElement>('input[name=preferred]:checked');
          const indiff = panel.querySelector<HTMLInputElement>('#indiff');
          if (preferred === null || indiff === null || indiff.value === '') {
            $('wizard-error').textContent = 'pick an option and an indifference cost';
            return;
          }
          await wizard.submitPair(preferred.value, Number(indiff.value));
        } else {
          const pe = panel.querySelector<HTMLInputElement>('#pe');
          if (pe === null || pe.value === '') return;
          await wizard.submitPe(Number(pe.value));
        }
        render();
      } catch (err) {
        // validation problems (e.g. indifference cost above the stated cost)
        // surface inline and the question stays put
        $('wizard-error').textContent = err instanceof ApiError ? err.detail : String(err);
      }
    });
  };
  render();
}

// -------------------------------------------------------------- what-if --

function setupWhatIf(api: HttpApiClient): void {
  const explorer = new WhatIfController(api, BENCHMARK_PROFILE);
  const controls = $('whatif-controls');
  const output = $('whatif-output');
  const pins = $('whatif-pins');

  const selects = Object.entries(PROFILE_FIELDS).map(([field, states]) => {
    const options = ['<option value="">(unknown)</option>'].concat(
      states.map((s) =>
        `<option value="${s}"${explorer.profile[field] === s ? ' selected' : ''}>${s}</option>`));
    return `<label>${field} <select data-field="${field}">${options.join('')}</select></label>`;
  });
  controls.innerHTML = selects.join(' ') +
    ' <label><input type="checkbox" id="risk-seeking"> risk-seeking (ρ 0.039 → 0.005)</label>' +
    ' <label>exogenous p(CRC) <input type="number" id="override" step="0.01" min="0" max="1"></label>' +
    ' <button id="pin">Pin scenario</button> <button id="clear">Clear evidence</button>';

  const renderOutput = (): void => {
    if (explorer.last === null) return;
    output.innerHTML = riskLine(explorer.last) + strategyTable(explorer.last);
    const pair = explorer.comparison();
    if (pair !== null) {
      pins.innerHTML = pair.map((s) =>
        `<div class="pin"><h4>${s.name}</h4>${riskLine(s.response)}` +
        `${strategyTable(s.response)}</div>`).join('');
    }
  };
  const guard = (work: Promise<unknown>): void => {
    work.then(renderOutput).catch((err) => showError(output, err));
  };

  controls.querySelectorAll<HTMLSelectElement>('select[data-field]').forEach((select) => {
    select.addEventListener('change', () =>
      guard(explorer.setField(select.dataset.field ?? '', select.value || null)));
  });
  $('risk-seeking').addEventListener('change', (event) =>
    guard(explorer.toggleRiskSeeking((event.target as HTMLInputElement).checked)));
  $('override').addEventListener('change', (event) => {
    const raw = (event.target as HTMLInputElement).value;
    guard(explorer.setPriorOverride(raw === '' ? null : Number(raw)));
  });
  $('pin').addEventListener('click', () => {
    explorer.pin(`scenario ${explorer.pinned.length + 1}`);
    renderOutput();
  });
  $('clear').addEventListener('click', () => guard(explorer.clearEvidence()));
  guard(explorer.refresh());
}

// ------------------------------------------------------------ dashboard --

function setupDashboard(api: HttpApiClient): void {
  const dashboard = new DashboardController(api);
  const form = $('dashboard-form');
  const output = $('dashboard-output');

  const limitInputs = Object.entries(TABLE9_DEFAULT_LIMITS).map(([tid, cap]) =>
    `<label>${tid} <input type="number" data-limit="${tid}" value="${cap}" min="0"></label>`);
  form.innerHTML = limitInputs.join(' ') +
    ' <label>population CSV path <input type="text" id="population" size="40"></label>' +
    ' <label>runs <input type="number" id="runs" value="200" min="1"></label>' +
    ' <label>seed <input type="number" id="seed" value="0"></label>' +
    ' <button id="launch">Launch allocation</button>' +
    ' <button id="load-curves">Show info curves</button>' +
    ' <fieldset><legend>New device</legend>' +
    ' id <input id="dev-id" size="8" value="Dev2">' +
    ' sens <input id="dev-sens" size="5" value="0.85">' +
    ' spec <input id="dev-spec" size="5" value="0.94">' +
    ' cost <input id="dev-cost" size="7" value="3">' +
    ' comfort <input id="dev-comfort" size="2" value="3">' +
    ' <button id="check-device">Check dominance</button>' +
    ' <span id="device-banner"></span></fieldset>';

  form.querySelectorAll<HTMLInputElement>('input[data-limit]').forEach((input) => {
    input.addEventListener('change', () =>
      dashboard.setLimit(input.dataset.limit ?? '', Number(input.value)));
  });
  $('launch').addEventListener('click', async () => {
    output.innerHTML = '<p>running…</p>';
    try {
      const population = (form.querySelector('#population') as HTMLInputElement).value;
      const runs = Number((form.querySelector('#runs') as HTMLInputElement).value);
      const seed = Number((form.querySelector('#seed') as HTMLInputElement).value);
      const job = await dashboard.launch(population, runs, seed);
      if (job.status === 'done' && job.result !== undefined) {
        output.innerHTML = countsTable(job.result.counts) +
          confusionTable(job.result.simulation);
      } else {
        output.innerHTML = `<p class="error">job ${job.status}: ${job.error ?? ''}</p>`;
      }
    } catch (err) {
      showError(output, err);
    }
  });
  $('load-curves').addEventListener('click', async () => {
    try {
      const curves = await dashboard.loadCurves(['FIT', 'sDNA', 'gFOBT', 'CC', 'CTC', 'BloodBased']);
      $('dashboard-curves').innerHTML = curvesSvg(curves);
    } catch (err) {
      showError($('dashboard-curves'), err);
    }
  });
  $('check-device').addEventListener('click', async () => {
    try {
      await dashboard.checkDevice({
        id: (form.querySelector('#dev-id') as HTMLInputElement).value,
        sensitivity: Number((form.querySelector('#dev-sens') as HTMLInputElement).value),
        specificity: Number((form.querySelector('#dev-spec') as HTMLInputElement).value),
        unitCost: Number((form.querySelector('#dev-cost') as HTMLInputElement).value),
        comfort: Number((form.querySelector('#dev-comfort') as HTMLInputElement).value),
      });
      $('device-banner').textContent = dashboard.dominanceBanner() ?? '';
    } catch (err) {
      showError($('device-banner'), err);
    }
  });
}

export function bootstrap(): void {
  // same-origin by default; ?api=http://127.0.0.1:8000 points elsewhere
  // (the service allows cross-origin requests)
  const base = new URLSearchParams(window.location.search).get('api') ?? '';
  const api = new HttpApiClient(base);
  setupWizard(api);
  setupWhatIf(api);
  setupDashboard(api);
}

if (typeof document !== 'undefined' && document.getElementById('wizard-question') !== null) {
  bootstrap();
}
