/**
 * Wire types mirroring the service's documented envelope schema.
 * All option references on the wire are 1-based option numbers.
 */

export type EnvelopeKind =
  | 'session_created'
  | 'turn_result'
  | 'belief_snapshot'
  | 'convergence_snapshot'
  | 'session_ended'
  | 'error';

export interface Envelope {
  kind: EnvelopeKind;
  session_id: string;
  seq: number;
  payload: Record<string, unknown>;
}

export interface IssueView {
  issue_id: string;
  name: string;
  option_labels: string[];
  human_payoffs: number[];
  tau_min: number;
  tau_max: number;
}

export interface SessionDescriptor {
  session_id: string;
  condition: 'baseline' | 'decision_support';
  dimensionality: number;
  non_canonical_dimensionality: boolean;
  caps: { max_rounds: number; max_seconds: number };
  issues: IssueView[];
}

export interface WireOffer {
  proposer: 'human' | 'agent';
  selections: Record<string, number>; // 1-based
  note: string;
}

export interface TurnResultPayload {
  turn_number: number;
  round: number;
  phase: string;
  agreed: boolean;
  human_offer: WireOffer;
  agent_offer: WireOffer;
  timing: {
    received_at_ms: number;
    first_keystroke_at_ms: number;
    submitted_at_ms: number;
  };
}

export interface IssueBeliefRecord {
  issue_id: string;
  pmf: number[];
  zopa_range: [number, number] | null; // 1-based inclusive option numbers
  boundary_confidence: number;
  c_proposal: number;
  c_temporal: number;
  s_consistency: number;
  proposal_history: number[];
}

export interface BeliefSnapshotPayload {
  issues: IssueBeliefRecord[];
  grid: {
    issue_ids: string[];
    intensities: number[][];
    tiers: number[][];
  };
}

export interface ConvergencePayload {
  convergence_ratio: number;
  width_percentage: number;
  weighted_position: number;
  color_stop: number;
}

export interface SessionEndedPayload {
  outcome: { kind: string; selections?: Record<string, number>; reason?: string };
  phase: string;
  metrics: Record<string, unknown>;
}

export interface TimingRecord {
  received_at_ms: number;
  first_keystroke_at_ms: number;
  submitted_at_ms: number;
}
