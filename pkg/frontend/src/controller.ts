/**
 * Interaction loop: tools, drags, rotation gestures and the resolve flow.
 *
 * The controller is DOM-free: it consumes abstract pointer events in
 * screen coordinates and talks to the service through a SessionClient,
 * so the whole loop is testable against a stubbed socket. One mutating
 * request is in flight at a time; pose updates are throttled to 10 Hz
 * and coalesced.
 */

import { SessionClient, ServiceRequestError } from './client.js';
import { EditorSnapshot, emptySnapshot } from './render.js';
import { HandleInfo, HandleSpec, PoseEntry, SessionSummary } from './protocol.js';
import { CoalescingThrottle } from './throttle.js';
import { ViewState, initialView, fitCamera, screenToWorld } from './view.js';

export const POSE_RATE_HZ = 10;
const HANDLE_GRAB_PX = 12;

export interface Toast {
  kind: 'error' | 'info';
  code?: string;
  message: string;
  action?: 'recompute';
}

export class EditorController {
  readonly client: SessionClient;
  readonly view: ViewState;
  snapshot: EditorSnapshot;
  toasts: Toast[] = [];
  onChange: (() => void) | null = null;

  private width: number;
  private height: number;
  private throttle: CoalescingThrottle<PoseEntry[]>;
  private drag: {
    handleId: number;
    startWorld: [number, number];
    mode: 'translate' | 'rotate';
    baseAngle: number;
  } | null = null;
  private poses = new Map<number, PoseEntry>();
  private segmentDraft: [number, number][] = [];

  constructor(client: SessionClient, width: number, height: number, clock?: {
    now: () => number;
    schedule: (fn: () => void, ms: number) => unknown;
    cancel: (token: unknown) => void;
  }) {
    this.client = client;
    this.view = initialView();
    this.snapshot = emptySnapshot();
    this.width = width;
    this.height = height;
    this.throttle = new CoalescingThrottle<PoseEntry[]>(
      POSE_RATE_HZ, (poses) => void this.sendPoses(poses), clock);
  }

  private notify(): void {
    this.onChange?.();
  }

  private toast(toast: Toast): void {
    this.toasts.push(toast);
    this.notify();
  }

  private applySummary(summary: SessionSummary): void {
    this.snapshot.handles = summary.handles;
    this.snapshot.metrics = summary.metrics;
    this.snapshot.violations = summary.violations;
    this.snapshot.weightsStale = summary.weights_stale;
    if (summary.points) {
      this.snapshot.points = summary.points;
    }
    this.notify();
  }

  get handleCount(): number {
    return this.snapshot.handles.length;
  }

  async open(domainDoc: unknown): Promise<void> {
    const reply = await this.client.openSession(domainDoc);
    this.snapshot = emptySnapshot();
    this.snapshot.points = reply.points;
    this.view.camera = fitCamera(reply.points, this.width, this.height);
    this.notify();
  }

  // -- pointer events (screen coordinates) --------------------------------

  async pointerDown(px: number, py: number): Promise<void> {
    const world = screenToWorld(this.view.camera, this.width, this.height, px, py);
    switch (this.view.tool) {
      case 'place-point':
        await this.placePoint(world);
        return;
      case 'place-segment':
        this.segmentDraft.push(world);
        this.notify();
        return;
      case 'drag':
      case 'rotate': {
        const hit = this.hitHandle(px, py);
        if (hit !== null) {
          this.view.selectedHandle = hit.id;
          this.drag = {
            handleId: hit.id,
            startWorld: world,
            mode: this.view.tool === 'rotate' ? 'rotate' : 'translate',
            baseAngle: this.snapshot.handleAngles.get(hit.id) ?? 0,
          };
          this.notify();
        }
      }
    }
  }

  pointerMove(px: number, py: number): void {
    if (!this.drag) {
      return;
    }
    const world = screenToWorld(this.view.camera, this.width, this.height, px, py);
    const handle = this.findHandle(this.drag.handleId);
    if (!handle) {
      return;
    }
    const origin = handle.positions[0];
    let pose: PoseEntry;
    if (this.drag.mode === 'translate') {
      const dx = world[0] - this.drag.startWorld[0];
      const dy = world[1] - this.drag.startWorld[1];
      pose = { handle: handle.id, angle_deg: 0, translation: [dx, dy] };
    } else {
      const a0 = Math.atan2(this.drag.startWorld[1] - origin[1],
        this.drag.startWorld[0] - origin[0]);
      const a1 = Math.atan2(world[1] - origin[1], world[0] - origin[0]);
      const angle = this.drag.baseAngle + (a1 - a0);
      this.snapshot.handleAngles.set(handle.id, angle);
      pose = {
        handle: handle.id,
        angle_deg: angle * 180 / Math.PI,
        center: [origin[0], origin[1]],
      };
    }
    this.poses.set(handle.id, pose);
    this.throttle.push([...this.poses.values()]);
  }

  pointerUp(): void {
    if (this.drag) {
      this.drag = null;
      this.throttle.flush();
    }
  }

  /** Double-click or toolbar action finishes a segment draft. */
  async finishSegment(): Promise<void> {
    if (this.segmentDraft.length < 2) {
      this.segmentDraft = [];
      return;
    }
    const positions = this.segmentDraft.map((p) => [p[0], p[1]] as [number, number]);
    this.segmentDraft = [];
    const specs: HandleSpec[] = this.snapshot.handles.map((h) => handleToSpec(h));
    specs.push({ type: 'segment', positions });
    await this.guard(async () => {
      const summary = await this.client.setHandles(specs);
      this.applySummary(summary);
    });
  }

  private async placePoint(world: [number, number]): Promise<void> {
    await this.guard(async () => {
      const reply = await this.client.addHandle([world[0], world[1]]);
      this.applySummary(reply);
      this.view.selectedHandle = reply.handle_id;
    });
  }

  /** Resolve button: insert virtual handles, then recompute weights. */
  async resolve(alpha = 1.0): Promise<void> {
    await this.guard(async () => {
      const inserted = await this.client.insertVirtual();
      this.applySummary(inserted);
      await this.recompute(alpha);
    });
  }

  async recompute(alpha = 1.0): Promise<void> {
    await this.guard(async () => {
      await this.client.computeWeights(alpha);
      this.snapshot.weightsStale = false;
      if (this.view.heatmapHandle !== null) {
        await this.loadHeatmap(this.view.heatmapHandle);
      }
      this.notify();
    });
  }

  async loadHeatmap(handleId: number): Promise<void> {
    await this.guard(async () => {
      const reply = await this.client.getWeightField(handleId);
      this.view.heatmapHandle = handleId;
      this.snapshot.heatmap = reply.weights;
      this.notify();
    });
  }

  async loadPartition(): Promise<void> {
    await this.guard(async () => {
      const reply = await this.client.getPartition();
      this.snapshot.cellOf = reply.cell_of;
      this.notify();
    });
  }

  private async sendPoses(poses: PoseEntry[]): Promise<void> {
    try {
      const reply = await this.client.updateTransforms(poses);
      this.snapshot.points = reply.positions;
      this.notify();
    } catch (err) {
      if (err instanceof ServiceRequestError && err.code === 'StaleWeights') {
        this.toast({
          kind: 'error', code: err.code, message: err.message,
          action: 'recompute',
        });
      } else {
        this.toast({ kind: 'error', message: String(err) });
      }
    }
  }

  private async guard(body: () => Promise<void>): Promise<void> {
    try {
      await body();
    } catch (err) {
      if (err instanceof ServiceRequestError) {
        this.toast({
          kind: 'error', code: err.code, message: err.message,
          action: err.code === 'StaleWeights' ? 'recompute' : undefined,
        });
      } else {
        this.toast({ kind: 'error', message: String(err) });
      }
    }
  }

  private findHandle(id: number): HandleInfo | undefined {
    return this.snapshot.handles.find((h) => h.id === id);
  }

  private hitHandle(px: number, py: number): HandleInfo | null {
    for (const handle of this.snapshot.handles) {
      if (handle.kind === 'virtual') {
        continue; // virtual handles are engine-owned, not draggable
      }
      for (const pos of handle.positions) {
        const [hx, hy] = worldToScreenLocal(this.view, this.width, this.height, pos);
        const d = Math.hypot(hx - px, hy - py);
        if (d <= HANDLE_GRAB_PX) {
          return handle;
        }
      }
    }
    return null;
  }
}

function worldToScreenLocal(
  view: ViewState, w: number, h: number, pos: number[],
): [number, number] {
  const cam = view.camera;
  return [
    w / 2 + (pos[0] - cam.centerX) * cam.scale,
    h / 2 - (pos[1] - cam.centerY) * cam.scale,
  ];
}

function handleToSpec(h: HandleInfo) {
  return h.samples.length === 1
    ? { id: h.id, type: 'point' as const, sample: h.samples[0] }
    : { id: h.id, type: 'segment' as const, samples: h.samples };
}
