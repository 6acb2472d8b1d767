/**
 * Cold-to-hot colormap for weight heatmaps plus discrete isocurve bands.
 */

const STOPS: [number, [number, number, number]][] = [
  [0.0, [28, 36, 120]],    // cold blue
  [0.25, [40, 120, 220]],
  [0.5, [120, 220, 120]],
  [0.75, [245, 200, 60]],
  [1.0, [220, 40, 30]],    // hot red
];

export function heatColor(w: number): string {
  const t = Math.min(1, Math.max(0, w));
  for (let i = 1; i < STOPS.length; i++) {
    const [t1, c1] = STOPS[i];
    const [t0, c0] = STOPS[i - 1];
    if (t <= t1) {
      const s = (t - t0) / (t1 - t0);
      const r = Math.round(c0[0] + s * (c1[0] - c0[0]));
      const g = Math.round(c0[1] + s * (c1[1] - c0[1]));
      const b = Math.round(c0[2] + s * (c1[2] - c0[2]));
      return `rgb(${r},${g},${b})`;
    }
  }
  return 'rgb(220,40,30)';
}

export const ISO_LEVELS = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/** Band index in 0..9 for the discrete isocurve view (10 bands). */
export function isoBand(w: number): number {
  const t = Math.min(1, Math.max(0, w));
  return Math.min(9, Math.floor(t * 10));
}

/** Posterized band color: discrete level-set rendering of the field. */
export function isoBandColor(w: number): string {
  return heatColor((isoBand(w) + 0.5) / 10);
}
