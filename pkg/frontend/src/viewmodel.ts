import type {
  BeliefSnapshotPayload,
  ConvergencePayload,
  SessionDescriptor,
} from './types';

/** Engine-side saturation cap; an intensity of 0.6 renders fully saturated. */
export const INTENSITY_CAP = 0.6;
export const MIN_WIDTH_PCT = 100 / 7;
export const OPTION_COUNT = 7;

const clamp = (value: number, lo: number, hi: number): number =>
  Math.min(hi, Math.max(lo, value));

/** Monotone map from served intensity [0, 0.6] to css alpha [0, 1]. */
export function saturationFor(intensity: number): number {
  return clamp(intensity / INTENSITY_CAP, 0, 1);
}

export function cellColor(saturation: number): string {
  return `rgba(22, 163, 74, ${saturation.toFixed(4)})`;
}

/** Position on the red-amber-green ramp: 0 red, 0.5 amber, 1 green. */
export function rampColor(colorStop: number): string {
  const hue = Math.round(clamp(colorStop, 0, 1) * 120);
  return `hsl(${hue}, 72%, 42%)`;
}

export interface GridCellVM {
  col: number; // 0-based option column
  intensity: number;
  saturation: number;
  tier: number;
  inZopa: boolean;
}

export interface GridRowVM {
  issueId: string;
  name: string;
  zopa: [number, number] | null; // 0-based inclusive column range
  cells: GridCellVM[];
}

export interface GridViewModel {
  rows: GridRowVM[];
}

export interface PanelViewModel {
  widthPct: number;
  positionPct: number;
  colorStop: number;
  color: string;
}

export function buildGridViewModel(
  session: SessionDescriptor,
  snapshot: BeliefSnapshotPayload,
): GridViewModel {
  const names = new Map(session.issues.map((issue) => [issue.issue_id, issue.name]));
  const byIssue = new Map(snapshot.issues.map((record) => [record.issue_id, record]));
  const rows = snapshot.grid.issue_ids.map((issueId, rowIndex) => {
    const record = byIssue.get(issueId);
    const wireZopa = record?.zopa_range ?? null;
    // wire ranges are 1-based option numbers; columns are 0-based
    const zopa: [number, number] | null =
      wireZopa === null ? null : [wireZopa[0] - 1, wireZopa[1] - 1];
    const intensities = snapshot.grid.intensities[rowIndex];
    const tiers = snapshot.grid.tiers[rowIndex];
    const cells = intensities.map((intensity, col) => ({
      col,
      intensity,
      saturation: saturationFor(intensity),
      tier: tiers[col],
      inZopa: zopa !== null && col >= zopa[0] && col <= zopa[1],
    }));
    return { issueId, name: names.get(issueId) ?? issueId, zopa, cells };
  });
  return { rows };
}

export function buildPanelViewModel(snapshot: ConvergencePayload): PanelViewModel {
  const widthPct = clamp(snapshot.width_percentage, MIN_WIDTH_PCT, 100);
  const positionPct = clamp(snapshot.weighted_position, 0, 100);
  const colorStop = clamp(snapshot.color_stop, 0, 1);
  return { widthPct, positionPct, colorStop, color: rampColor(colorStop) };
}
