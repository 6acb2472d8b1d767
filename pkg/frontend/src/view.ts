/**
 * View state: camera, tool, selection and overlay mode.
 */

export type Tool = 'place-point' | 'place-segment' | 'drag' | 'rotate';

export type OverlayMode =
  | 'none'
  | 'weight-heatmap'
  | 'isocurves'
  | 'voronoi'
  | 'virtual-markers';

export interface Camera {
  centerX: number;
  centerY: number;
  scale: number; // canvas pixels per model unit; > 0 keeps it invertible
}

export interface ViewState {
  camera: Camera;
  tool: Tool;
  selectedHandle: number | null;
  overlay: OverlayMode;
  heatmapHandle: number | null;
}

export function initialView(): ViewState {
  return {
    camera: { centerX: 0, centerY: 0, scale: 200 },
    tool: 'drag',
    selectedHandle: null,
    overlay: 'none',
    heatmapHandle: null,
  };
}

export function worldToScreen(
  cam: Camera, w: number, h: number, x: number, y: number,
): [number, number] {
  return [
    w / 2 + (x - cam.centerX) * cam.scale,
    h / 2 - (y - cam.centerY) * cam.scale, // y up in model space
  ];
}

export function screenToWorld(
  cam: Camera, w: number, h: number, px: number, py: number,
): [number, number] {
  return [
    cam.centerX + (px - w / 2) / cam.scale,
    cam.centerY - (py - h / 2) / cam.scale,
  ];
}

export function fitCamera(points: number[][], w: number, h: number): Camera {
  if (points.length === 0) {
    return { centerX: 0, centerY: 0, scale: 200 };
  }
  let minX = Infinity, maxX = -Infinity, minY = Infinity, maxY = -Infinity;
  for (const [x, y] of points) {
    minX = Math.min(minX, x); maxX = Math.max(maxX, x);
    minY = Math.min(minY, y); maxY = Math.max(maxY, y);
  }
  const spanX = Math.max(maxX - minX, 1e-9);
  const spanY = Math.max(maxY - minY, 1e-9);
  const scale = 0.9 * Math.min(w / spanX, h / spanY);
  return {
    centerX: (minX + maxX) / 2,
    centerY: (minY + maxY) / 2,
    scale,
  };
}
