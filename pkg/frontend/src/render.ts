/** HTML renderers. Pure functions from service responses to markup; the
 * displayed figures are the response values, formatted only. */

import type {
  CurvesResponse,
  RankedStrategy,
  RecommendResponse,
  SimulationSummary,
} from './types.js';

const escapeHtml = (value: string): string =>
  value.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;');

export const fmtProb = (x: number): string => x.toFixed(6);
export const fmtEu = (x: number): string => x.toFixed(3);
export const fmtEuro = (x: number): string => x.toFixed(2);

export function strategyTable(response: RecommendResponse): string {
  const rows = response.strategies.map((s: RankedStrategy, i: number) => {
    const branches = Object.entries(s.branchEUs)
      .map(([result, eu]) =>
        `${escapeHtml(result)}: col ${fmtEu(eu.col)} / no-col ${fmtEu(eu.noCol)}`)
      .join('; ');
    return `<tr><td>${i + 1}</td><td>${escapeHtml(s.label)}</td>` +
      `<td>${fmtEu(s.expectedUtility)}</td><td>${fmtEuro(s.expectedCost)}</td>` +
      `<td class="branches">${branches}</td></tr>`;
  });
  return `<table class="strategies">` +
    `<thead><tr><th>#</th><th>strategy</th><th>EU</th><th>exp. cost €</th>` +
    `<th>branch EUs</th></tr></thead><tbody>${rows.join('')}</tbody></table>`;
}

export function riskLine(response: RecommendResponse): string {
  return `<p class="risk">p(CRC) = <strong>${fmtProb(response.pCrc)}</strong></p>`;
}

export function confusionTable(sim: SimulationSummary): string {
  const m = sim.confusionMean;
  const s = sim.confusionStd;
  const cell = (key: string): string =>
    `${m[key].toFixed(1)} ± ${s[key].toFixed(1)}`;
  return `<table class="confusion">` +
    `<thead><tr><th></th><th>Predicted no CRC</th><th>Predicted CRC</th></tr></thead>` +
    `<tbody>` +
    `<tr><th>No CRC</th><td>${cell('TN')}</td><td>${cell('FP')}</td></tr>` +
    `<tr><th>CRC</th><td>${cell('FN')}</td><td>${cell('TP')}</td></tr>` +
    `</tbody></table>` +
    `<p class="metrics">sensitivity ${sim.sensitivity.toFixed(3)}, ` +
    `precision ${sim.precision.toFixed(3)}, F1 ${sim.f1.toFixed(3)}, ` +
    `cost/patient ${fmtEuro(sim.costPerPatient)} € over ${sim.runs} runs</p>`;
}

export function countsTable(counts: Record<string, number>): string {
  const keys = Object.keys(counts);
  const header = keys.map((k) => `<th>${escapeHtml(k)}</th>`).join('');
  const row = keys.map((k) => `<td>${counts[k]}</td>`).join('');
  return `<table class="counts"><thead><tr>${header}</tr></thead>` +
    `<tbody><tr>${row}</tr></tbody></table>`;
}

/** Inline SVG polyline chart of information curves. */
export function curvesSvg(curves: CurvesResponse, width = 640, height = 320): string {
  const series = Object.entries(curves);
  if (series.length === 0) return '<svg></svg>';
  const all = series.flatMap(([, pairs]) => pairs);
  const xs = all.map(([p]) => p);
  const ys = all.map(([, v]) => v);
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ys, 0), Math.max(...ys, 1e-9)];
  const sx = (x: number): number => ((x - x0) / (x1 - x0)) * (width - 40) + 30;
  const sy = (y: number): number => height - 20 - ((y - y0) / (y1 - y0)) * (height - 40);
  const palette = ['#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e', '#8c564b'];
  const lines = series.map(([method, pairs], i) => {
    const points = pairs.map(([p, v]) => `${sx(p).toFixed(1)},${sy(v).toFixed(1)}`).join(' ');
    return `<polyline fill="none" stroke="${palette[i % palette.length]}" ` +
      `stroke-width="1.5" points="${points}"><title>${escapeHtml(method)}</title></polyline>`;
  });
  const legend = series.map(([method], i) =>
    `<text x="${40 + i * 110}" y="14" fill="${palette[i % palette.length]}">` +
    `${escapeHtml(method)}</text>`);
  return `<svg viewBox="0 0 ${width} ${height}" role="img">` +
    lines.join('') + legend.join('') + '</svg>';
}
