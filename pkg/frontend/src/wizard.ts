/** Elicitation interview wizard.
 *
 * Walks the server-issued question sequence (pairwise indifference
 * questions per comfort level, then the probability-equivalent question),
 * keeps the comfort-weight estimates the server reports for each answer,
 * and offers a transcript download in the exact format the CLI replays.
 * All numbers come from service responses; nothing is recomputed here.
 */

import type { ApiClient } from './api.js';
import type {
  ElicitationResult,
  PairQuestion,
  PeQuestion,
  Question,
} from './types.js';

export interface AnsweredPair {
  question: PairQuestion;
  preferred: string;
  indifferenceCost: number;
  lambdaEstimate: number;
}

export interface WizardState {
  sessionId: string | null;
  totalQuestions: number;
  current: Question | null;
  peQuestion: PeQuestion | null;
  answered: AnsweredPair[];
  peValue: number | null;
  result: ElicitationResult | null;
}

const EMPTY: WizardState = {
  sessionId: null,
  totalQuestions: 0,
  current: null,
  peQuestion: null,
  answered: [],
  peValue: null,
  result: null,
};

export class WizardController {
  state: WizardState = { ...EMPTY, answered: [] };

  constructor(private readonly api: ApiClient) {}

  async start(): Promise<Question> {
    const session = await this.api.startElicitation();
    this.state = { ...EMPTY, answered: [], sessionId: session.id,
                   totalQuestions: session.totalQuestions };
    this.setCurrent(session.question);
    return session.question;
  }

  private setCurrent(question: Question | null): void {
    this.state.current = question;
    if (question !== null && question.kind === 'pe') {
      this.state.peQuestion = question;
    }
  }

  get progress(): { answered: number; total: number } {
    const answered = this.state.answered.length + (this.state.peValue !== null ? 1 : 0);
    return { answered, total: this.state.totalQuestions };
  }

  /** Live per-level estimates, as reported by the server so far. */
  get lambdaEstimates(): Record<number, number[]> {
    const out: Record<number, number[]> = {};
    for (const item of this.state.answered) {
      (out[item.question.comfort] ??= []).push(item.lambdaEstimate);
    }
    return out;
  }

  async submitPair(preferred: string, indifferenceCost: number): Promise<Question | null> {
    const { sessionId, current } = this.state;
    if (sessionId === null || current === null || current.kind !== 'pair') {
      throw new Error('no pairwise question pending');
    }
    const accepted = await this.api.answerPair(sessionId, current.index, preferred, indifferenceCost);
    this.state.answered.push({
      question: current,
      preferred,
      indifferenceCost,
      lambdaEstimate: accepted.lambdaEstimate ?? NaN,
    });
    this.setCurrent(accepted.question ?? null);
    return this.state.current;
  }

  async submitPe(peValue: number): Promise<ElicitationResult> {
    const { sessionId, current } = this.state;
    if (sessionId === null || current === null || current.kind !== 'pe') {
      throw new Error('no probability-equivalent question pending');
    }
    await this.api.answerPe(sessionId, current.index, peValue);
    this.state.peValue = peValue;
    this.state.current = null;
    this.state.result = await this.api.elicitationResult(sessionId);
    return this.state.result;
  }

  /** Transcript identical to the CLI replay format. */
  transcript(): Record<string, unknown> {
    const answers = this.state.answered.map((item) => ({
      comfort: item.question.comfort,
      optionA: item.question.optionA,
      optionB: item.question.optionB,
      preferred: item.preferred,
      indifferenceCost: item.indifferenceCost,
    }));
    const doc: Record<string, unknown> = { answers };
    const pe = this.state.peQuestion;
    if (this.state.peValue !== null && pe !== null) {
      doc.pe = {
        bestAnchor: pe.bestAnchor,
        worstAnchor: pe.worstAnchor,
        point: pe.point,
        value: this.state.peValue,
      };
    }
    return doc;
  }

  /** Snapshot of the server-mirrored state, for mid-session resume. */
  serialize(): string {
    return JSON.stringify(this.state);
  }

  static restore(api: ApiClient, raw: string): WizardController {
    const controller = new WizardController(api);
    controller.state = JSON.parse(raw) as WizardState;
    return controller;
  }
}
