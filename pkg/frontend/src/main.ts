/** Browser entry point: connect, subscribe, render. */

import { ConsoleClient } from "./client";
import { ConsoleUI } from "./ui";

const DEFAULT_FPS = 15;

function serverUri(): string {
  const param = new URLSearchParams(window.location.search).get("uri");
  if (param) return param;
  const host = window.location.hostname || "127.0.0.1";
  return `ws://${host}:8765`;
}

const socket = new WebSocket(serverUri());
const client = new ConsoleClient(socket);
socket.addEventListener("open", () => {
  client.send({ type: "subscribe_frames", fps: DEFAULT_FPS });
});

const root = document.getElementById("app");
if (root === null) throw new Error("missing #app root");
const ui = new ConsoleUI(document, client, root);

function frameLoop(): void {
  ui.renderFrame();
  window.requestAnimationFrame(frameLoop);
}
window.requestAnimationFrame(frameLoop);

// staleness is a function of wall time, not of message arrival
window.setInterval(() => ui.render(), 250);
