/** Shapes of the v1 service payloads the UI consumes (and nothing else:
 *  every number shown on screen arrives through one of these). */

export interface PosteriorResponse {
  pCrc: number;
  entropy: number;
}

export interface StrategyDescriptor {
  screening: string;
  colRule: Record<string, boolean>;
}

export interface RankedStrategy {
  strategy: StrategyDescriptor;
  label: string;
  expectedUtility: number;
  expectedCost: number;
  expectedInfo: number;
  branchEUs: Record<string, { col: number; noCol: number }>;
}

export interface RecommendResponse {
  pCrc: number;
  strategies: RankedStrategy[];
}

export interface PairOption {
  id: string;
  info: number;
  cost: number | null;
}

export interface PairQuestion {
  index: number;
  kind: 'pair';
  comfort: number;
  optionA: PairOption;
  optionB: PairOption;
}

export interface PeQuestion {
  index: number;
  kind: 'pe';
  bestAnchor: [number, number];
  worstAnchor: [number, number];
  point: [number, number];
}

export type Question = PairQuestion | PeQuestion;

export interface SessionStart {
  id: string;
  totalQuestions: number;
  question: Question;
}

export interface AnswerAccepted {
  accepted: number;
  lambdaEstimate?: number;
  question?: Question;
  complete?: boolean;
}

export interface ElicitationResult {
  lambdas: Record<string, number>;
  estimates: Record<string, number[]>;
  a: number;
  b: number;
  rho: number;
}

export interface JobSubmitted {
  jobId: string;
  status: string;
}

export interface SimulationSummary {
  confusionMean: Record<string, number>;
  confusionStd: Record<string, number>;
  sensitivity: number;
  precision: number;
  f1: number;
  costPerPatient: number;
  runs: number;
  seed: number;
}

export interface JobStatus {
  jobId: string;
  status: 'queued' | 'running' | 'done' | 'failed';
  result?: {
    counts: Record<string, number>;
    exhausted: string[];
    simulation: SimulationSummary;
  };
  error?: string;
}

export interface DeviceBenchmarkResponse {
  device: Record<string, unknown>;
  dominated: boolean;
  by: string | null;
  findings: Array<{ kind: string; intervention: string; by: string }>;
  counts?: Record<string, number>;
  simulation?: SimulationSummary;
}

/** method id -> [p, value] pairs */
export type CurvesResponse = Record<string, Array<[number, number]>>;
