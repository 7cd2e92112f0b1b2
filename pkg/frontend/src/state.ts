/** Console view state and its reducer.
 *
 * The state is derived exclusively from control-channel messages; the
 * console never simulates the engine. Reducers are pure so every
 * transition is unit-testable without a socket or a DOM.
 */

import type {
  EngineState,
  PressureFrame,
  ServerMessage,
} from "./protocol";

export type ConnectionState = "connecting" | "connected" | "disconnected";

export interface TickerEntry {
  time: number | null;
  text: string;
}

export interface LiveMetrics {
  time: number;
  headX: number | null;
  headSpeed: number | null;
  cof: [number, number] | null;
  trialsResolved: number;
  trialsSucceeded: number;
  lastClearance: number | null;
  spawned: number;
}

export interface ObstacleMarker {
  id: number;
  x: number;
  heightMm: number;
}

export interface ConsoleState {
  connection: ConnectionState;
  engineVersion: string | null;
  engineState: EngineState;
  /** another client holds the controller slot */
  observerOnly: boolean;
  ackedConfig: Record<string, unknown> | null;
  fieldErrors: Record<string, string>;
  lastError: string | null;
  metrics: LiveMetrics | null;
  ticker: TickerEntry[];
  presentedNumbers: number[];
  obstacles: ObstacleMarker[];
  report: Record<string, unknown> | null;
  frame: PressureFrame | null;
  frameWallMs: number | null;
  walkingStartWallMs: number | null;
}

export const TICKER_LIMIT = 200;

export function initialState(): ConsoleState {
  return {
    connection: "connecting",
    engineVersion: null,
    engineState: "idle",
    observerOnly: false,
    ackedConfig: null,
    fieldErrors: {},
    lastError: null,
    metrics: null,
    ticker: [],
    presentedNumbers: [],
    obstacles: [],
    report: null,
    frame: null,
    frameWallMs: null,
    walkingStartWallMs: null,
  };
}

export type Action =
  | { kind: "open" }
  | { kind: "close" }
  | { kind: "server"; msg: ServerMessage; wallMs: number }
  | { kind: "frame"; frame: PressureFrame; wallMs: number };

function pushTicker(state: ConsoleState, time: number | null,
                    text: string): TickerEntry[] {
  return [{ time, text }, ...state.ticker].slice(0, TICKER_LIMIT);
}

/** Obstacle grid spacing is part of the wire protocol: obstacles sit every
 * 2 m starting at x = 2 m. Anticipated obstacles never emit spawn events,
 * so their overlay positions come from this protocol constant plus the
 * acknowledged config, not from any client-side engine model. */
export function anticipatedPositions(config: Record<string, unknown> | null):
    ObstacleMarker[] {
  const obstacle = (config?.obstacle ?? null) as
    { mode?: string; height_mm?: number; count?: number } | null;
  if (!obstacle || obstacle.mode !== "anticipated") return [];
  const count = obstacle.count ?? 0;
  const heightMm = obstacle.height_mm ?? 0;
  const markers: ObstacleMarker[] = [];
  for (let k = 0; k < count; k += 1) {
    markers.push({ id: k, x: 2.0 + 2.0 * k, heightMm });
  }
  return markers;
}

export function reduce(state: ConsoleState, action: Action): ConsoleState {
  switch (action.kind) {
    case "open":
      return { ...state, connection: "connected" };
    case "close":
      return { ...state, connection: "disconnected" };
    case "frame":
      return { ...state, frame: action.frame, frameWallMs: action.wallMs };
    case "server":
      return applyServer(state, action.msg, action.wallMs);
  }
}

function applyServer(state: ConsoleState, msg: ServerMessage,
                     wallMs: number): ConsoleState {
  switch (msg.type) {
    case "hello":
      return {
        ...state,
        connection: "connected",
        engineVersion: msg.engine_version,
        engineState: msg.state,
      };
    case "ack":
      if (msg.of === "configure_session" && msg.config) {
        return {
          ...state,
          ackedConfig: msg.config,
          fieldErrors: {},
          lastError: null,
          obstacles: anticipatedPositions(msg.config),
          ticker: pushTicker(state, null, "session configured"),
        };
      }
      if (msg.of === "spawn_obstacle") {
        const text = msg.spawned
          ? "manual obstacle spawn"
          : "no pending obstacle to spawn";
        return { ...state, ticker: pushTicker(state, null, text) };
      }
      return state;
    case "error": {
      const busy = msg.message.startsWith("busy:");
      const fieldErrors = msg.field
        ? { ...state.fieldErrors, [msg.field]: msg.message }
        : state.fieldErrors;
      return {
        ...state,
        observerOnly: state.observerOnly || busy,
        fieldErrors,
        lastError: msg.message,
        ticker: pushTicker(state, null, `error: ${msg.message}`),
      };
    }
    case "state_update": {
      const fresh = msg.state === "countdown" && state.engineState !== "countdown";
      return {
        ...state,
        engineState: msg.state,
        // a new run starts: drop the previous session's live data
        metrics: fresh ? null : state.metrics,
        report: fresh ? null : state.report,
        presentedNumbers: fresh ? [] : state.presentedNumbers,
        walkingStartWallMs:
          msg.state === "walking" ? wallMs : state.walkingStartWallMs,
        ticker: pushTicker(state, msg.time ?? null, `state: ${msg.state}`),
      };
    }
    case "metrics_update":
      return {
        ...state,
        metrics: {
          time: msg.time,
          headX: msg.head_x,
          headSpeed: msg.head_speed,
          cof: msg.cof,
          trialsResolved: msg.trials_resolved,
          trialsSucceeded: msg.trials_succeeded,
          lastClearance: msg.last_clearance,
          spawned: msg.spawned,
        },
      };
    case "obstacle_event": {
      if (msg.event === "spawn") {
        const marker: ObstacleMarker = {
          id: msg.obstacle_id,
          x: msg.x_position ?? 0,
          heightMm: msg.height_mm ?? 0,
        };
        return {
          ...state,
          obstacles: [...state.obstacles.filter((o) => o.id !== marker.id),
                      marker],
          ticker: pushTicker(state, msg.time,
                             `obstacle ${msg.obstacle_id} spawned at `
                             + `${marker.x.toFixed(2)} m (${marker.heightMm} mm)`),
        };
      }
      if (msg.event === "result") {
        const verdict = msg.success ? "success" : "collision";
        return {
          ...state,
          ticker: pushTicker(state, msg.time,
                             `obstacle ${msg.obstacle_id}: ${verdict}`),
        };
      }
      return {
        ...state,
        ticker: pushTicker(state, msg.time, `cue for obstacle ${msg.obstacle_id}`),
      };
    }
    case "sentence_event":
      if (msg.edge === "start") {
        return {
          ...state,
          presentedNumbers: [...state.presentedNumbers, ...(msg.numbers ?? [])],
          ticker: pushTicker(state, msg.time, `sentence ${msg.sentence_id} starts`),
        };
      }
      return {
        ...state,
        ticker: pushTicker(state, msg.time, `sentence ${msg.sentence_id} ends`),
      };
    case "session_report":
      return {
        ...state,
        report: msg.report,
        ticker: pushTicker(state, null, "session report received"),
      };
  }
}

// -- derived views -----------------------------------------------------------

export interface ControlsEnabled {
  configure: boolean;
  start: boolean;
  abort: boolean;
  spawn: boolean;
  recall: boolean;
}

function configuredMode(state: ConsoleState): string | null {
  const obstacle = (state.ackedConfig?.obstacle ?? null) as
    { mode?: string } | null;
  return obstacle?.mode ?? null;
}

/** Every control gates on the live connection and the engine state; a lost
 * connection disables everything at once. */
export function controlsEnabled(state: ConsoleState): ControlsEnabled {
  const up = state.connection === "connected" && !state.observerOnly;
  return {
    configure: up && state.engineState === "idle",
    start: up && state.engineState === "idle" && state.ackedConfig !== null,
    abort: up && (state.engineState === "countdown"
      || state.engineState === "walking" || state.engineState === "recall"),
    spawn: up && state.engineState === "walking"
      && configuredMode(state) === "unanticipated",
    recall: up && state.engineState === "recall",
  };
}

export const STALE_AFTER_MS = 1000;

/** Stale banner: during walking, no frame for more than a second. Before
 * the first frame the walking start stands in for the last arrival. */
export function isStale(state: ConsoleState, nowMs: number): boolean {
  if (state.engineState !== "walking") return false;
  const last = state.frameWallMs ?? state.walkingStartWallMs;
  if (last === null) return false;
  return nowMs - last > STALE_AFTER_MS;
}

/** Parse a recall entry like "7, 12 3"; non-numeric tokens are reported
 * instead of silently dropped so nothing is sent with a typo in it. */
export function parseRecallInput(text: string):
    { numbers: number[] } | { error: string } {
  const tokens = text.split(/[\s,;]+/).filter((t) => t.length > 0);
  const numbers: number[] = [];
  for (const token of tokens) {
    if (!/^-?\d+$/.test(token)) {
      return { error: `not a number: "${token}"` };
    }
    numbers.push(Number.parseInt(token, 10));
  }
  return { numbers };
}
