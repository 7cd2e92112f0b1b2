/** DOM construction and rendering for the console.
 *
 * All engine-facing behaviour lives in the client/state modules; this
 * layer only reflects ConsoleState into elements and turns clicks into
 * control messages. Element ids are stable for the tests.
 */

import type { ConsoleClient } from "./client";
import {
  blankPixels,
  framePixels,
  frameSize,
  obstacleSpan,
  worldToCell,
} from "./heatmap";
import type { SessionConfigDict } from "./protocol";
import {
  controlsEnabled,
  isStale,
  parseRecallInput,
  type ConsoleState,
} from "./state";

/** Server error `field` hints to the control that caused them. */
const FIELD_TO_CONTROL: Record<string, string> = {
  height: "cfg-height",
  mode: "cfg-mode",
  count: "cfg-count",
  tile_count: "cfg-tiles",
  seed: "cfg-seed",
  duration: "cfg-duration",
  countdown: "cfg-countdown",
  numbers: "recall-input",
  fps: "cfg-fps",
};

export const OBSTACLE_HEIGHTS_MM = [25, 50, 75, 100, 125, 150, 190];

function el<K extends keyof HTMLElementTagNameMap>(
    doc: Document, tag: K, attrs: Record<string, string> = {},
    text = ""): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text) node.textContent = text;
  return node;
}

function labeled(doc: Document, label: string, control: HTMLElement,
                 errorId: string): HTMLElement {
  const wrap = el(doc, "label", { class: "field" });
  wrap.append(el(doc, "span", { class: "field-name" }, label), control,
              el(doc, "span", { class: "field-error", id: errorId }));
  return wrap;
}

export class ConsoleUI {
  readonly doc: Document;
  private lastDrawnSeq: number | null = null;

  constructor(doc: Document, private client: ConsoleClient,
              root: HTMLElement) {
    this.doc = doc;
    root.append(this.buildBanner(), this.buildConfigPanel(),
                this.buildRunPanel(), this.buildHeatmap(),
                this.buildMetrics(), this.buildRecall(),
                this.buildReport(), this.buildTicker());
    client.onChange(() => this.render());
    this.render();
  }

  private get<T extends HTMLElement>(id: string): T {
    return this.doc.getElementById(id) as T;
  }

  // -- construction ----------------------------------------------------------

  private buildBanner(): HTMLElement {
    const banner = el(this.doc, "div", { class: "banner", id: "banner" });
    banner.append(el(this.doc, "span", { id: "conn-state" }),
                  el(this.doc, "span", { id: "engine-state" }),
                  el(this.doc, "span", { id: "stale-banner", hidden: "" },
                     "stale data: no frames for over a second"),
                  el(this.doc, "span", { id: "observer-note", hidden: "" },
                     "observer mode: another controller is active"));
    return banner;
  }

  private buildConfigPanel(): HTMLElement {
    const doc = this.doc;
    const panel = el(doc, "fieldset", { class: "panel", id: "config-panel" });
    panel.append(el(doc, "legend", {}, "session"));

    const height = el(doc, "select", { id: "cfg-height" });
    for (const mm of OBSTACLE_HEIGHTS_MM) {
      height.append(el(doc, "option",
                       { value: String(mm), ...(mm === 100 ? { selected: "" } : {}) },
                       `${mm} mm`));
    }
    const mode = el(doc, "select", { id: "cfg-mode" });
    mode.append(el(doc, "option", { value: "anticipated" }, "anticipated"),
                el(doc, "option", { value: "unanticipated" }, "unanticipated"));
    const sound = el(doc, "select", { id: "cfg-sound" });
    sound.append(el(doc, "option", { value: "quiet" }, "quiet"),
                 el(doc, "option", { value: "busy" }, "busy"));
    const visual = el(doc, "select", { id: "cfg-visual" });
    visual.append(el(doc, "option", { value: "empty" }, "empty"),
                  el(doc, "option", { value: "busy" }, "busy"));
    const cognitive = el(doc, "input", { type: "checkbox", id: "cfg-cognitive" });
    const seed = el(doc, "input", { type: "number", id: "cfg-seed", value: "0" });
    const tiles = el(doc, "input", { type: "number", id: "cfg-tiles", value: "12" });
    const count = el(doc, "input", { type: "number", id: "cfg-count", value: "2" });

    panel.append(
      labeled(doc, "obstacle height", height, "err-height"),
      labeled(doc, "obstacle mode", mode, "err-mode"),
      labeled(doc, "obstacle count", count, "err-count"),
      labeled(doc, "walkway tiles", tiles, "err-tile_count"),
      labeled(doc, "seed", seed, "err-seed"),
      labeled(doc, "sound", sound, "err-sound"),
      labeled(doc, "visual load", visual, "err-visual"),
      labeled(doc, "cognitive task", cognitive, "err-cognitive"),
    );
    const configure = el(doc, "button", { id: "btn-configure" }, "configure");
    configure.addEventListener("click", () => this.sendConfigure());
    panel.append(configure);
    return panel;
  }

  private buildRunPanel(): HTMLElement {
    const doc = this.doc;
    const panel = el(doc, "div", { class: "panel", id: "run-panel" });
    const start = el(doc, "button", { id: "btn-start" }, "start");
    start.addEventListener("click", () =>
      this.client.send({ type: "start_session" }));
    const abort = el(doc, "button", { id: "btn-abort" }, "abort");
    abort.addEventListener("click", () => this.client.send({ type: "abort" }));
    const spawn = el(doc, "button", { id: "btn-spawn" }, "spawn obstacle now");
    spawn.addEventListener("click", () =>
      this.client.send({ type: "spawn_obstacle" }));
    panel.append(start, abort, spawn);
    return panel;
  }

  private buildHeatmap(): HTMLElement {
    const wrap = el(this.doc, "div", { class: "panel", id: "heatmap-panel" });
    wrap.append(el(this.doc, "canvas", { id: "heatmap", width: "576", height: "33" }));
    return wrap;
  }

  private buildMetrics(): HTMLElement {
    const panel = el(this.doc, "div", { class: "panel", id: "metrics-panel" });
    panel.append(el(this.doc, "pre", { id: "metrics" }));
    return panel;
  }

  private buildRecall(): HTMLElement {
    const doc = this.doc;
    const panel = el(doc, "div", { class: "panel", id: "recall-panel" });
    const input = el(doc, "input",
                     { type: "text", id: "recall-input",
                       placeholder: "numbers the participant reported" });
    const submit = el(doc, "button", { id: "btn-recall" }, "submit recall");
    submit.addEventListener("click", () => this.sendRecall());
    panel.append(labeled(doc, "recall", input, "err-numbers"), submit);
    return panel;
  }

  private buildReport(): HTMLElement {
    const panel = el(this.doc, "div", { class: "panel", id: "report-panel" });
    panel.append(el(this.doc, "pre", { id: "report" }));
    return panel;
  }

  private buildTicker(): HTMLElement {
    const panel = el(this.doc, "div", { class: "panel", id: "ticker-panel" });
    panel.append(el(this.doc, "ul", { id: "ticker" }));
    return panel;
  }

  // -- outgoing --------------------------------------------------------------

  private sendConfigure(): void {
    const num = (id: string, fallback: number): number => {
      const parsed = Number(this.get<HTMLInputElement>(id).value);
      return Number.isFinite(parsed) ? parsed : fallback;
    };
    const config: SessionConfigDict = {
      walkway: { tile_count: num("cfg-tiles", 12) },
      duration: 60.0,
      seed: num("cfg-seed", 0),
      obstacle: {
        mode: this.get<HTMLSelectElement>("cfg-mode").value,
        height_mm: num("cfg-height", 100),
        count: num("cfg-count", 2),
      },
      condition: {
        sound: { level: this.get<HTMLSelectElement>("cfg-sound").value },
        visual: { level: this.get<HTMLSelectElement>("cfg-visual").value },
        cognitive: this.get<HTMLInputElement>("cfg-cognitive").checked,
      },
    };
    this.client.send({ type: "configure_session", config });
  }

  private sendRecall(): void {
    const parsed = parseRecallInput(
      this.get<HTMLInputElement>("recall-input").value);
    const errorSpan = this.get<HTMLElement>("err-numbers");
    if ("error" in parsed) {
      errorSpan.textContent = parsed.error;
      return;
    }
    errorSpan.textContent = "";
    this.client.send({ type: "submit_recall", numbers: parsed.numbers });
  }

  // -- rendering ---------------------------------------------------------------

  render(nowMs: number = Date.now()): void {
    const state = this.client.state;
    const enabled = controlsEnabled(state);

    this.get("conn-state").textContent = state.connection
      + (state.engineVersion ? ` (engine ${state.engineVersion})` : "");
    this.get("engine-state").textContent = `state: ${state.engineState}`;
    this.get("stale-banner").hidden = !isStale(state, nowMs);
    this.get("observer-note").hidden = !state.observerOnly;

    const disable = (id: string, on: boolean) => {
      this.get<HTMLButtonElement>(id).disabled = !on;
    };
    disable("btn-configure", enabled.configure);
    disable("btn-start", enabled.start);
    disable("btn-abort", enabled.abort);
    disable("btn-spawn", enabled.spawn);
    disable("btn-recall", enabled.recall);
    this.get<HTMLButtonElement>("btn-spawn").hidden = !enabled.spawn;
    for (const input of ["cfg-height", "cfg-mode", "cfg-count", "cfg-tiles",
                         "cfg-seed", "cfg-sound", "cfg-visual",
                         "cfg-cognitive"]) {
      this.get<HTMLInputElement>(input).disabled = !enabled.configure;
    }
    this.get<HTMLInputElement>("recall-input").disabled = !enabled.recall;

    for (const [field, controlId] of Object.entries(FIELD_TO_CONTROL)) {
      const span = this.doc.getElementById(
        controlId === "recall-input" ? "err-numbers" : `err-${field}`);
      if (span && field !== "numbers") {
        span.textContent = state.fieldErrors[field] ?? "";
      }
    }

    this.renderMetrics(state);
    this.renderReport(state);
    this.renderTicker(state);
  }

  private renderMetrics(state: ConsoleState): void {
    const m = state.metrics;
    const fmt = (v: number | null, digits = 3) =>
      v === null ? "n/a" : v.toFixed(digits);
    const lines = m === null ? ["no live metrics yet"] : [
      `t ${m.time.toFixed(2)} s`,
      `head speed ${fmt(m.headSpeed)} m/s`,
      `trials ${m.trialsSucceeded}/${m.trialsResolved} succeeded`
      + ` (${m.spawned} spawned)`,
      `last clearance ${fmt(m.lastClearance)} m`,
    ];
    this.get("metrics").textContent = lines.join("\n");
  }

  private renderReport(state: ConsoleState): void {
    const report = state.report;
    if (report === null) {
      this.get("report").textContent = "";
      return;
    }
    const gait = (report.gait ?? {}) as Record<string, number | null>;
    const recall = report.recall as
      { correct: number; total: number; accuracy: number } | null;
    const fmt = (v: number | null | undefined, digits = 3) =>
      v === null || v === undefined ? "n/a" : v.toFixed(digits);
    const lines = [
      `steps ${gait.step_count ?? "n/a"}   cadence ${fmt(gait.cadence, 1)}`,
      `speed ${fmt(gait.mean_speed)} m/s   step length ${fmt(gait.step_length_mean)} m`,
      `success rate ${fmt(report.success_rate as number | null, 2)}`,
      recall
        ? `recall ${recall.correct}/${recall.total} (accuracy ${recall.accuracy.toFixed(2)})`
        : "recall n/a",
      `flags: ${((report.flags as string[]) ?? []).join(", ") || "none"}`,
    ];
    this.get("report").textContent = lines.join("\n");
  }

  private renderTicker(state: ConsoleState): void {
    const list = this.get<HTMLUListElement>("ticker");
    list.textContent = "";
    for (const entry of state.ticker.slice(0, 30)) {
      const time = entry.time === null ? "" : `[${entry.time.toFixed(2)}s] `;
      list.append(el(this.doc, "li", {}, `${time}${entry.text}`));
    }
  }

  /** Draw the newest frame if it changed; returns true when a draw
   * happened (the render loop and tests use this to measure fps). With no
   * frames yet the canvas shows the uniform cold background. */
  renderFrame(): boolean {
    const state = this.client.state;
    const canvas = this.get<HTMLCanvasElement>("heatmap");
    const frame = state.frame;
    if (frame === null) {
      if (this.lastDrawnSeq === null) this.paintBlank(canvas);
      return false;
    }
    if (frame.seq === this.lastDrawnSeq) return false;
    this.lastDrawnSeq = frame.seq;
    const { width, height } = frameSize(frame.tileCount);
    if (canvas.width !== width) canvas.width = width;
    if (canvas.height !== height) canvas.height = height;
    const ctx = canvas.getContext("2d");
    if (ctx === null) return true; // headless DOM: state advanced, no paint
    const pixels = new Uint8ClampedArray(framePixels(frame));
    ctx.putImageData(new ImageData(pixels, width, height), 0, 0);
    this.drawOverlays(ctx, state, height);
    return true;
  }

  private paintBlank(canvas: HTMLCanvasElement): void {
    const ctx = canvas.getContext("2d");
    if (ctx === null) return;
    const tiles = Math.max(1, Math.round(canvas.width / 48));
    const { width, height } = frameSize(tiles);
    const pixels = new Uint8ClampedArray(blankPixels(tiles));
    ctx.putImageData(new ImageData(pixels, width, height), 0, 0);
  }

  private drawOverlays(ctx: CanvasRenderingContext2D, state: ConsoleState,
                       height: number): void {
    ctx.save();
    ctx.strokeStyle = "rgba(255, 255, 255, 0.8)";
    for (const marker of state.obstacles) {
      const span = obstacleSpan(marker.x);
      ctx.strokeRect(span.start + 0.5, 0.5,
                     span.end - span.start - 1, height - 1);
    }
    const cof = state.metrics?.cof ?? null;
    if (cof !== null) {
      const cell = worldToCell(cof[0], cof[1]);
      ctx.strokeStyle = "rgba(255, 255, 255, 0.95)";
      ctx.beginPath();
      ctx.arc(cell.col + 0.5, cell.row + 0.5, 2.5, 0, 2 * Math.PI);
      ctx.stroke();
    }
    ctx.restore();
  }
}
