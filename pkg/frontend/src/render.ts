/**
 * Canvas renderer: point cloud, handle markers with orientation frames,
 * virtual-handle markers, weight heatmap and discrete isocurve bands.
 *
 * Pure drawing: everything rendered comes from the snapshot, which holds
 * only numbers received from the service.
 */

import { heatColor, isoBandColor } from './colormap.js';
import { HandleInfo, HandleMetrics } from './protocol.js';
import { ViewState, worldToScreen } from './view.js';

/** Subset of CanvasRenderingContext2D the renderer touches (stubbed in tests). */
export interface Ctx2D {
  fillStyle: string;
  strokeStyle: string;
  lineWidth: number;
  font: string;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
}

export interface EditorSnapshot {
  points: number[][];                    // current (possibly deformed) positions
  handles: HandleInfo[];
  metrics: HandleMetrics[];
  violations: number[];
  weightsStale: boolean;
  heatmap: number[] | null;              // per-sample weights of one handle
  cellOf: number[] | null;               // per-sample owning handle id
  handleAngles: Map<number, number>;     // orientation glyph angle per handle
}

export function emptySnapshot(): EditorSnapshot {
  return {
    points: [], handles: [], metrics: [], violations: [],
    weightsStale: false, heatmap: null, cellOf: null,
    handleAngles: new Map(),
  };
}

const POINT_RADIUS = 1.5;
const HANDLE_RADIUS = 7;
const VIRTUAL_RADIUS = 4;
const FRAME_LENGTH = 18;

const CELL_PALETTE = [
  '#4d7ce8', '#e8a04d', '#58c470', '#d95f80', '#9a6fe0',
  '#50bdbd', '#c9cf53', '#e06c45', '#7a8ff0', '#5fae3f',
];

export function renderFrame(
  ctx: Ctx2D, width: number, height: number,
  snapshot: EditorSnapshot, view: ViewState,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = '#11131a';
  ctx.fillRect(0, 0, width, height);
  drawGrid(ctx, width, height, view);

  const cam = view.camera;
  for (let i = 0; i < snapshot.points.length; i++) {
    const [x, y] = snapshot.points[i];
    const [px, py] = worldToScreen(cam, width, height, x, y);
    ctx.fillStyle = samplePointColor(snapshot, view, i);
    ctx.beginPath();
    ctx.arc(px, py, POINT_RADIUS, 0, Math.PI * 2);
    ctx.fill();
  }

  const violating = new Set(snapshot.violations);
  for (const handle of snapshot.handles) {
    const virtual = handle.kind === 'virtual';
    for (const pos of handle.positions) {
      const [px, py] = worldToScreen(cam, width, height, pos[0], pos[1]);
      if (virtual) {
        const emphasized = view.overlay === 'virtual-markers';
        ctx.fillStyle = '#3f7fff';
        ctx.beginPath();
        ctx.arc(px, py, emphasized ? VIRTUAL_RADIUS + 3 : VIRTUAL_RADIUS, 0, Math.PI * 2);
        ctx.fill();
        continue;
      }
      ctx.fillStyle = violating.has(handle.id) ? '#ff4444'
        : handle.id === view.selectedHandle ? '#ffd24d' : '#f2f2f2';
      ctx.beginPath();
      ctx.arc(px, py, HANDLE_RADIUS, 0, Math.PI * 2);
      ctx.fill();
      drawFrame(ctx, px, py, snapshot.handleAngles.get(handle.id) ?? 0);
      ctx.fillStyle = '#dddddd';
      ctx.font = '11px sans-serif';
      ctx.fillText(String(handle.id), px + HANDLE_RADIUS + 2, py - HANDLE_RADIUS);
    }
    // segment handles: connect their sample chain
    if (!virtual && handle.positions.length > 1) {
      ctx.strokeStyle = '#f2f2f2';
      ctx.lineWidth = 2;
      ctx.beginPath();
      const [sx, sy] = worldToScreen(cam, width, height,
        handle.positions[0][0], handle.positions[0][1]);
      ctx.moveTo(sx, sy);
      for (const pos of handle.positions.slice(1)) {
        const [px, py] = worldToScreen(cam, width, height, pos[0], pos[1]);
        ctx.lineTo(px, py);
      }
      ctx.stroke();
    }
  }

  if (snapshot.weightsStale) {
    ctx.fillStyle = '#ffb347';
    ctx.font = '13px sans-serif';
    ctx.fillText('weights stale: resolve & recompute', 12, 20);
  }
}

/** Orientation glyph: a small frame (two axes) rotated by the handle angle. */
function drawFrame(ctx: Ctx2D, px: number, py: number, angle: number): void {
  const c = Math.cos(angle);
  const s = Math.sin(angle);
  ctx.lineWidth = 2;
  ctx.strokeStyle = '#ff5533';
  ctx.beginPath();
  ctx.moveTo(px, py);
  ctx.lineTo(px + FRAME_LENGTH * c, py - FRAME_LENGTH * s);
  ctx.stroke();
  ctx.strokeStyle = '#55dd66';
  ctx.beginPath();
  ctx.moveTo(px, py);
  ctx.lineTo(px - FRAME_LENGTH * s, py - FRAME_LENGTH * c);
  ctx.stroke();
}

function samplePointColor(
  snapshot: EditorSnapshot, view: ViewState, index: number,
): string {
  if (view.overlay === 'weight-heatmap' && snapshot.heatmap) {
    return heatColor(snapshot.heatmap[index]);
  }
  if (view.overlay === 'isocurves' && snapshot.heatmap) {
    return isoBandColor(snapshot.heatmap[index]);
  }
  if (view.overlay === 'voronoi' && snapshot.cellOf) {
    return CELL_PALETTE[snapshot.cellOf[index] % CELL_PALETTE.length];
  }
  return '#8892a8';
}

function drawGrid(ctx: Ctx2D, width: number, height: number, view: ViewState): void {
  const cam = view.camera;
  const step = gridStep(cam.scale);
  ctx.strokeStyle = '#222633';
  ctx.lineWidth = 1;
  const [x0, y1] = screenCorner(cam, width, height, 0, 0);
  const [x1, y0] = screenCorner(cam, width, height, width, height);
  for (let x = Math.ceil(x0 / step) * step; x <= x1; x += step) {
    const [px] = worldToScreen(cam, width, height, x, 0);
    ctx.beginPath();
    ctx.moveTo(px, 0);
    ctx.lineTo(px, height);
    ctx.stroke();
  }
  for (let y = Math.ceil(y0 / step) * step; y <= y1; y += step) {
    const [, py] = worldToScreen(cam, width, height, 0, y);
    ctx.beginPath();
    ctx.moveTo(0, py);
    ctx.lineTo(width, py);
    ctx.stroke();
  }
}

function screenCorner(
  cam: ViewState['camera'], w: number, h: number, px: number, py: number,
): [number, number] {
  return [
    cam.centerX + (px - w / 2) / cam.scale,
    cam.centerY - (py - h / 2) / cam.scale,
  ];
}

function gridStep(scale: number): number {
  const raw = 60 / scale;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  for (const m of [1, 2, 5, 10]) {
    if (raw <= m * mag) {
      return m * mag;
    }
  }
  return 10 * mag;
}
