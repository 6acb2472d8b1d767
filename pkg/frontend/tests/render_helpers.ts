import { EditorController } from '../src/controller.js';
import { Ctx2D, renderFrame } from '../src/render.js';

export interface RecordingCtxLike extends Ctx2D {
  calls: { op: string; args: unknown[]; fillStyle?: string }[];
}

class RecordingCtx implements RecordingCtxLike {
  fillStyle = '';
  strokeStyle = '';
  lineWidth = 1;
  font = '';
  calls: { op: string; args: unknown[]; fillStyle?: string }[] = [];

  clearRect(...args: number[]): void { this.calls.push({ op: 'clearRect', args }); }
  fillRect(...args: number[]): void { this.calls.push({ op: 'fillRect', args }); }
  beginPath(): void { this.calls.push({ op: 'beginPath', args: [] }); }
  arc(...args: number[]): void {
    this.calls.push({ op: 'arc', args, fillStyle: this.fillStyle });
  }
  moveTo(...args: number[]): void { this.calls.push({ op: 'moveTo', args }); }
  lineTo(...args: number[]): void { this.calls.push({ op: 'lineTo', args }); }
  stroke(): void { this.calls.push({ op: 'stroke', args: [] }); }
  fill(): void { this.calls.push({ op: 'fill', args: [] }); }
  fillText(text: string, x: number, y: number): void {
    this.calls.push({ op: 'fillText', args: [text, x, y] });
  }
}

export function renderWith(controller: EditorController): RecordingCtxLike {
  const ctx = new RecordingCtx();
  renderFrame(ctx, 400, 300, controller.snapshot, controller.view);
  return ctx;
}
