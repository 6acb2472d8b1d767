/**
 * Thin request/response client over a WebSocket-like transport.
 *
 * The socket is injected (browser WebSocket, `ws`, or a test stub); the
 * client owns only message correlation. All geometry and weight numbers
 * displayed by the editor originate from service replies.
 */

import {
  AddHandleReply,
  ComputeWeightsReply,
  HandleSpec,
  InsertVirtualReply,
  OpenSessionReply,
  PoseEntry,
  ServiceError,
  SessionSummary,
  UpdateTransformsReply,
  isServiceError,
} from './protocol.js';

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((event: { data: string }) => void) | null;
  onopen: ((event: unknown) => void) | null;
  onerror: ((event: unknown) => void) | null;
  onclose: ((event: unknown) => void) | null;
  readyState?: number;
}

export class ServiceRequestError extends Error {
  readonly code: string;

  constructor(err: ServiceError) {
    super(`${err.error}: ${err.message}`);
    this.code = err.error;
  }
}

export class SessionClient {
  private socket: SocketLike;
  private nextId = 1;
  private pending = new Map<number, {
    resolve: (reply: any) => void;
    reject: (err: Error) => void;
  }>();
  sessionId: string | null = null;

  constructor(socket: SocketLike) {
    this.socket = socket;
    socket.onmessage = (event) => this.dispatch(event.data);
  }

  private dispatch(data: string): void {
    const reply = JSON.parse(data);
    const waiter = this.pending.get(reply.id);
    if (!waiter) {
      return; // unsolicited message; protocol is strictly request/response
    }
    this.pending.delete(reply.id);
    if (isServiceError(reply)) {
      waiter.reject(new ServiceRequestError(reply));
    } else {
      waiter.resolve(reply);
    }
  }

  request<T>(type: string, payload: Record<string, unknown> = {}): Promise<T> {
    const id = this.nextId++;
    const body: Record<string, unknown> = { type, id, ...payload };
    if (this.sessionId !== null && !('session_id' in body)) {
      body.session_id = this.sessionId;
    }
    return new Promise<T>((resolve, reject) => {
      this.pending.set(id, { resolve, reject });
      try {
        this.socket.send(JSON.stringify(body));
      } catch (err) {
        this.pending.delete(id);
        reject(err as Error);
      }
    });
  }

  get inFlight(): number {
    return this.pending.size;
  }

  async openSession(domain: unknown): Promise<OpenSessionReply> {
    const reply = await this.request<OpenSessionReply>('open_session', { domain });
    this.sessionId = reply.session_id;
    return reply;
  }

  setHandles(handles: HandleSpec[]): Promise<SessionSummary> {
    return this.request('set_handles', { handles });
  }

  addHandle(position: [number, number]): Promise<AddHandleReply> {
    return this.request('add_handle', { position });
  }

  insertVirtual(): Promise<InsertVirtualReply> {
    return this.request('insert_virtual', {});
  }

  computeWeights(alpha = 1.0, basis?: unknown): Promise<ComputeWeightsReply> {
    const payload: Record<string, unknown> = { alpha };
    if (basis) {
      payload.basis = basis;
    }
    return this.request('compute_weights', payload);
  }

  getWeightField(handleId: number): Promise<{ weights: number[] }> {
    return this.request('get_weight_field', { handle_id: handleId });
  }

  getPartition(): Promise<{ cell_of: number[] }> {
    return this.request('get_partition', {});
  }

  updateTransforms(poses: PoseEntry[]): Promise<UpdateTransformsReply> {
    return this.request('update_transforms', { poses });
  }

  close(): void {
    this.socket.close();
  }
}
