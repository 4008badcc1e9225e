// WebSocket session wrapper. Inbound messages are queued and drained by
// the render loop; nothing is processed on the network callback itself.

import { ClientMsg, Mode, ServerMsg, parseServerMsg } from "./types.js";

export type Status = "connecting" | "open" | "closed";

// the subset of the browser WebSocket that tests can fake and that the
// "ws" package also implements
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: any) => void) | null;
  onmessage: ((ev: any) => void) | null;
  onclose: ((ev?: any) => void) | null;
  onerror: ((ev?: any) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export class SessionClient {
  private socket: SocketLike | null = null;
  private _status: Status = "closed";
  readonly queue: ServerMsg[] = [];
  mode: Mode;
  onStatus: ((s: Status) => void) | null = null;
  onMalformed: ((raw: string) => void) | null = null;

  constructor(
    readonly url: string,
    mode: Mode,
    readonly factory: SocketFactory,
  ) {
    this.mode = mode;
  }

  get status(): Status {
    return this._status;
  }

  /** Open (or reopen) the socket; every open starts a fresh trial via
   *  "reset", so a reconnect restores a working session by itself. */
  connect(): void {
    if (this.socket) this.socket.close();
    const sock = this.factory(`${this.url}/ws?mode=${this.mode}`);
    this.socket = sock;
    this.setStatus("connecting");
    sock.onopen = () => {
      this.setStatus("open");
      this.reset(this.mode);
    };
    sock.onmessage = (ev) => {
      const msg = parseServerMsg(String(ev.data));
      if (msg === null) {
        if (this.onMalformed) this.onMalformed(String(ev.data));
        return;
      }
      this.queue.push(msg);
    };
    sock.onclose = () => this.setStatus("closed");
    sock.onerror = () => this.setStatus("closed");
  }

  /** All messages received since the last drain, oldest first. */
  drain(): ServerMsg[] {
    return this.queue.splice(0, this.queue.length);
  }

  send(msg: ClientMsg): void {
    if (this._status !== "open" || !this.socket) return; // dropped tick
    this.socket.send(JSON.stringify(msg));
  }

  reset(mode?: Mode): void {
    if (mode) this.mode = mode;
    this.send({ type: "reset", mode: this.mode });
  }

  place(point: [number, number]): void {
    this.send({ type: "place", point });
  }

  close(): void {
    this.send({ type: "close" });
    if (this.socket) this.socket.close();
    this.socket = null;
    this.setStatus("closed");
  }

  private setStatus(s: Status): void {
    this._status = s;
    if (this.onStatus) this.onStatus(s);
  }
}
