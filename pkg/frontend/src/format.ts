/**
 * Display formatting. Probabilities arrive as raw [0, 1] reals from the
 * service and every visible number passes through exactly one of these.
 */

/** 0.8463 -> "84.6%" (always one decimal place). */
export function formatPercent(p: number): string {
  return `${(p * 100).toFixed(1)}%`;
}

/**
 * Delta in percentage points, always signed: 0.0567 -> "+5.7", -0.02 -> "-2.0".
 * A delta that rounds to zero keeps a plus sign ("+0.0") so the badge reads
 * as "no change" rather than a missing value.
 */
export function formatDelta(delta: number): string {
  const points = (delta * 100).toFixed(1);
  return points.startsWith('-') ? points : `+${points}`;
}

/** Edge stroke width in px: confidence 0.5 -> 1.5, confidence 1.0 -> 4.0. */
export function edgeWidth(frequency: number | null): number {
  if (frequency === null) {
    return 1.5;
  }
  return 1.5 + 2.5 * Math.max(0, Math.min(1, (frequency - 0.5) / 0.5));
}

/** Edge opacity: low-confidence edges fade, never below 0.35. */
export function edgeOpacity(frequency: number | null): number {
  if (frequency === null) {
    return 1.0;
  }
  return 0.35 + 0.65 * Math.max(0, Math.min(1, frequency));
}
