/** Control-channel client: one socket, one state stream.
 *
 * The socket is injected as a minimal interface so unit tests can drive
 * the client with a fake and the node test runner can pass a `ws`
 * instance; the browser passes a plain WebSocket. Binary messages carry
 * exactly one pressure frame; only the latest frame is kept (rendering is
 * decoupled from receipt).
 */

import { decodeFrame, WireError, type ClientMessage } from "./protocol";
import { parseServerMessage } from "./protocol";
import {
  initialState,
  reduce,
  type Action,
  type ConsoleState,
} from "./state";

/** The subset of the WebSocket API the console uses. The listener takes
 * `any` so browser WebSocket, the `ws` package, and test fakes all
 * satisfy the interface without adapters. */
export interface SocketLike {
  binaryType: string;
  send(data: string): void;
  close(): void;
  addEventListener(type: "open" | "close" | "message" | "error",
                   listener: (event: any) => void): void;
}

type Listener = (state: ConsoleState) => void;

export class ConsoleClient {
  state: ConsoleState = initialState();
  private listeners: Listener[] = [];

  constructor(private socket: SocketLike,
              private now: () => number = () => Date.now()) {
    socket.binaryType = "arraybuffer";
    socket.addEventListener("open", () => this.dispatch({ kind: "open" }));
    socket.addEventListener("close", () => this.dispatch({ kind: "close" }));
    socket.addEventListener("error", () => this.dispatch({ kind: "close" }));
    socket.addEventListener("message", (event: { data: unknown }) => {
      this.onMessage(event.data);
    });
  }

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  dispatch(action: Action): void {
    this.state = reduce(this.state, action);
    for (const listener of this.listeners) listener(this.state);
  }

  private onMessage(data: unknown): void {
    const wallMs = this.now();
    if (typeof data === "string") {
      this.dispatch({ kind: "server", msg: parseServerMessage(data), wallMs });
      return;
    }
    let bytes: Uint8Array;
    if (data instanceof ArrayBuffer) {
      bytes = new Uint8Array(data);
    } else if (ArrayBuffer.isView(data as ArrayBufferView)) {
      const view = data as ArrayBufferView;
      bytes = new Uint8Array(view.buffer, view.byteOffset, view.byteLength);
    } else {
      return;
    }
    try {
      this.dispatch({ kind: "frame", frame: decodeFrame(bytes), wallMs });
    } catch (err) {
      if (!(err instanceof WireError)) throw err;
      // a corrupt frame must not take the console down; drop it
    }
  }

  send(msg: ClientMessage): void {
    this.socket.send(JSON.stringify(msg));
  }

  close(): void {
    this.socket.close();
  }
}
