/**
 * Browser bootstrap: wires the controller to the DOM and a WebSocket.
 *
 * Usage: serve this directory statically, run the engine service
 * (`mfdeform serve --port 8736`), open index.html and load a domain
 * JSON file (or start from the built-in demo disk).
 */

import { SessionClient, SocketLike } from './client.js';
import { EditorController } from './controller.js';
import { Ctx2D, renderFrame } from './render.js';
import { OverlayMode, Tool } from './view.js';

const SERVICE_URL = (window as any).MFD_SERVICE_URL ?? 'ws://127.0.0.1:8736/ws';

function demoDomain(): unknown {
  // small built-in disk so the editor works before any file is loaded
  const points: number[][] = [];
  let state = 42;
  const rand = () => {
    state = (state * 1664525 + 1013904223) >>> 0;
    return state / 2 ** 32;
  };
  while (points.length < 1500) {
    const x = 2 * rand() - 1;
    const y = 2 * rand() - 1;
    if (x * x + y * y <= 1) {
      points.push([x, y]);
    }
  }
  return { dim: 2, points, k: 16 };
}

async function boot(): Promise<void> {
  const canvas = document.getElementById('editor') as HTMLCanvasElement;
  // the browser context is a superset of the renderer's Ctx2D surface
  const ctx = canvas.getContext('2d')! as unknown as Ctx2D;
  const status = document.getElementById('status')!;
  const toasts = document.getElementById('toasts')!;

  const socket = new WebSocket(SERVICE_URL) as unknown as SocketLike;
  await new Promise<void>((resolve, reject) => {
    (socket as any).onopen = () => resolve();
    (socket as any).onerror = () =>
      reject(new Error(`cannot reach service at ${SERVICE_URL}`));
  });

  const client = new SessionClient(socket);
  const controller = new EditorController(client, canvas.width, canvas.height);

  const redraw = () => {
    renderFrame(ctx, canvas.width, canvas.height, controller.snapshot, controller.view);
    status.textContent =
      `${controller.snapshot.points.length} samples · ` +
      `${controller.handleCount} handles · ` +
      `${controller.snapshot.violations.length} violations` +
      (controller.snapshot.weightsStale ? ' · weights stale' : '');
    toasts.innerHTML = '';
    for (const toast of controller.toasts.slice(-3)) {
      const div = document.createElement('div');
      div.className = `toast ${toast.kind}`;
      div.textContent = toast.message;
      if (toast.action === 'recompute') {
        const btn = document.createElement('button');
        btn.textContent = 'recompute';
        btn.onclick = () => void controller.resolve();
        div.appendChild(btn);
      }
      toasts.appendChild(div);
    }
  };
  controller.onChange = redraw;

  canvas.addEventListener('pointerdown', (ev) => {
    const rect = canvas.getBoundingClientRect();
    void controller.pointerDown(ev.clientX - rect.left, ev.clientY - rect.top);
  });
  canvas.addEventListener('pointermove', (ev) => {
    const rect = canvas.getBoundingClientRect();
    controller.pointerMove(ev.clientX - rect.left, ev.clientY - rect.top);
  });
  canvas.addEventListener('pointerup', () => controller.pointerUp());
  canvas.addEventListener('dblclick', () => void controller.finishSegment());
  canvas.addEventListener('wheel', (ev) => {
    ev.preventDefault();
    const factor = ev.deltaY < 0 ? 1.15 : 1 / 1.15;
    controller.view.camera.scale *= factor;
    redraw();
  });

  for (const tool of ['place-point', 'place-segment', 'drag', 'rotate'] as Tool[]) {
    document.getElementById(`tool-${tool}`)!.addEventListener('click', () => {
      controller.view.tool = tool;
      redraw();
    });
  }
  const overlaySelect = document.getElementById('overlay') as HTMLSelectElement;
  overlaySelect.addEventListener('change', async () => {
    controller.view.overlay = overlaySelect.value as OverlayMode;
    if (controller.view.overlay === 'voronoi' && !controller.snapshot.cellOf) {
      await controller.loadPartition();
    }
    if ((controller.view.overlay === 'weight-heatmap'
         || controller.view.overlay === 'isocurves')
        && controller.view.selectedHandle !== null) {
      await controller.loadHeatmap(controller.view.selectedHandle);
    }
    redraw();
  });
  document.getElementById('resolve')!.addEventListener('click',
    () => void controller.resolve());

  const fileInput = document.getElementById('domain-file') as HTMLInputElement;
  fileInput.addEventListener('change', async () => {
    const file = fileInput.files?.[0];
    if (file) {
      await controller.open(JSON.parse(await file.text()));
    }
  });

  await controller.open(demoDomain());
  redraw();
}

void boot();
