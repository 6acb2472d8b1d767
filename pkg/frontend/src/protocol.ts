/**
 * Message shapes of the session service protocol.
 *
 * Every request carries a `type` and an `id`; the service echoes the id
 * on the matching reply. Errors come back as `{ error, message }`.
 */

export interface HandleSpec {
  id?: number;
  type?: 'point' | 'segment';
  position?: [number, number];
  positions?: [number, number][];
  sample?: number;
  samples?: number[];
  basis?: BasisSpec;
}

export type BasisSpec =
  | { type: 'bezier'; n: number; interior?: number[] }
  | { type: 'gaussian'; c: number | 'auto' };

export interface HandleInfo {
  id: number;
  kind: 'real-point' | 'real-segment' | 'virtual';
  samples: number[];
  positions: number[][];
}

export interface HandleMetrics {
  id: number;
  r_d: number;
  r_h: number | null;
  delta: number | null;
}

export interface SessionSummary {
  handles: HandleInfo[];
  metrics: HandleMetrics[];
  violations: number[];
  num_points: number;
  weights_stale: boolean;
  points?: number[][];
}

export interface OpenSessionReply {
  session_id: string;
  dim: number;
  num_points: number;
  points: number[][];
}

export interface InsertVirtualReply extends SessionSummary {
  trace: { handle: number; inserted_index: number; score: number }[];
  score_monotone: boolean;
}

export interface ComputeWeightsReply {
  handle_ids: number[];
  regime: 'interpolating' | 'approximating';
  alpha: number;
  stats: { id: number; min: number; max: number; mean: number; nonzero: number }[];
}

export interface AddHandleReply extends SessionSummary {
  handle_id: number;
  sample_index: number;
  snapped: boolean;
}

export interface PoseEntry {
  handle: number;
  quaternion?: [number, number, number, number];
  translation?: number[];
  matrix?: number[];
  angle_deg?: number;
  center?: number[];
}

export interface UpdateTransformsReply {
  positions: number[][];
  regime: string;
}

export interface ServiceError {
  error: string;
  message: string;
}

export function isServiceError(reply: unknown): reply is ServiceError {
  return typeof reply === 'object' && reply !== null && 'error' in reply;
}
