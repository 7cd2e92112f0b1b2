/** Control-channel message types and the binary pressure-frame decoder.
 *
 * Frame layout (little-endian): 22-byte header `magic "PWK1", version u8,
 * tile_count u8, rows u16, cols u16, seq u32, timestamp_us u64`, then
 * tile-major row-major u16 raw counts in 0..4095. Every malformed buffer
 * raises a typed WireError subclass; nothing else may escape the decoder.
 */

export const FRAME_MAGIC = [0x50, 0x57, 0x4b, 0x31]; // "PWK1"
export const WIRE_VERSION = 1;
export const HEADER_SIZE = 22;
export const TILE_ROWS = 33;
export const TILE_COLS = 48;
export const RAW_MAX = 4095;
export const PITCH_M = 0.0127;

export class WireError extends Error {}
export class BadMagicError extends WireError {}
export class UnsupportedVersionError extends WireError {}
export class TruncatedFrameError extends WireError {}
export class CorruptFrameError extends WireError {}

export interface PressureFrame {
  seq: number;
  timestampUs: number;
  tileCount: number;
  rows: number;
  cols: number;
  /** tile-major, row-major: values[(tile * rows + row) * cols + col] */
  values: Uint16Array;
}

/** Decode exactly one frame; trailing bytes are an error (the server sends
 * one frame per binary message). */
export function decodeFrame(data: ArrayBuffer | Uint8Array): PressureFrame {
  const bytes = data instanceof Uint8Array ? data : new Uint8Array(data);
  if (bytes.length < HEADER_SIZE) {
    throw new TruncatedFrameError(
      `need ${HEADER_SIZE} header bytes, have ${bytes.length}`);
  }
  for (let i = 0; i < 4; i += 1) {
    if (bytes[i] !== FRAME_MAGIC[i]) {
      throw new BadMagicError("frame does not start with PWK1");
    }
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const version = view.getUint8(4);
  if (version !== WIRE_VERSION) {
    throw new UnsupportedVersionError(`wire version ${version}, expected 1`);
  }
  const tileCount = view.getUint8(5);
  const rows = view.getUint16(6, true);
  const cols = view.getUint16(8, true);
  const seq = view.getUint32(10, true);
  const timestampBig = view.getBigUint64(14, true);
  if (tileCount < 1) {
    throw new CorruptFrameError("tile_count must be at least 1");
  }
  if (rows !== TILE_ROWS || cols !== TILE_COLS) {
    throw new CorruptFrameError(
      `tile grid ${rows}x${cols}, expected ${TILE_ROWS}x${TILE_COLS}`);
  }
  if (timestampBig > BigInt(Number.MAX_SAFE_INTEGER)) {
    throw new CorruptFrameError("timestamp exceeds the safe integer range");
  }
  const nodeCount = tileCount * rows * cols;
  const expected = HEADER_SIZE + nodeCount * 2;
  if (bytes.length < expected) {
    throw new TruncatedFrameError(
      `frame needs ${expected} bytes, have ${bytes.length}`);
  }
  if (bytes.length > expected) {
    throw new CorruptFrameError(
      `${bytes.length - expected} trailing bytes after the frame`);
  }
  const values = new Uint16Array(nodeCount);
  for (let i = 0; i < nodeCount; i += 1) {
    const raw = view.getUint16(HEADER_SIZE + i * 2, true);
    if (raw > RAW_MAX) {
      throw new CorruptFrameError(`raw count ${raw} exceeds ${RAW_MAX}`);
    }
    values[i] = raw;
  }
  return {
    seq, timestampUs: Number(timestampBig), tileCount, rows, cols, values,
  };
}

// -- JSON control messages ---------------------------------------------------

export type EngineState =
  | "idle" | "countdown" | "walking" | "recall" | "complete";

export interface HelloMessage {
  type: "hello"; engine_version: string; state: EngineState;
}
export interface AckMessage {
  type: "ack"; of: string;
  config?: Record<string, unknown>;
  fps?: number;
  spawned?: boolean;
}
export interface ErrorMessage {
  type: "error"; message: string; of?: string; field?: string | null;
}
export interface StateUpdateMessage {
  type: "state_update"; state: EngineState; time?: number;
}
export interface MetricsUpdateMessage {
  type: "metrics_update";
  time: number;
  head_x: number | null;
  head_speed: number | null;
  cof: [number, number] | null;
  trials_resolved: number;
  trials_succeeded: number;
  last_clearance: number | null;
  spawned: number;
}
export interface ObstacleEventMessage {
  type: "obstacle_event";
  event: "spawn" | "result" | "cue";
  time: number;
  obstacle_id: number;
  x_position?: number;
  height_mm?: number;
  success?: boolean;
  crossed?: boolean;
  lead_clearance?: number | null;
  [extra: string]: unknown;
}
export interface SentenceEventMessage {
  type: "sentence_event";
  edge: "start" | "end";
  time: number;
  sentence_id: number;
  text?: string;
  numbers?: number[];
}
export interface SessionReportMessage {
  type: "session_report"; report: Record<string, unknown>;
}

export type ServerMessage =
  | HelloMessage | AckMessage | ErrorMessage | StateUpdateMessage
  | MetricsUpdateMessage | ObstacleEventMessage | SentenceEventMessage
  | SessionReportMessage;

export function parseServerMessage(text: string): ServerMessage {
  let parsed: unknown;
  try {
    parsed = JSON.parse(text);
  } catch (err) {
    throw new WireError(`control message is not JSON: ${err}`);
  }
  if (typeof parsed !== "object" || parsed === null
      || typeof (parsed as { type?: unknown }).type !== "string") {
    throw new WireError("control message must be an object with a type");
  }
  return parsed as ServerMessage;
}

export interface SessionConfigDict {
  walkway?: { tile_count?: number; origin?: number };
  duration?: number;
  countdown_s?: number;
  seed?: number;
  participant?: string;
  obstacle?: { mode: string; height_mm: number; count: number } | null;
  condition?: {
    sound?: { level: string };
    visual?: { level: string };
    cognitive?: boolean;
  };
}

export type ClientMessage =
  | { type: "subscribe_frames"; fps: number }
  | { type: "configure_session"; config: SessionConfigDict }
  | { type: "start_session" }
  | { type: "abort" }
  | { type: "submit_recall"; numbers: number[] }
  | { type: "spawn_obstacle" };
