// Browser entry point: connect to a play server, render the field, turn
// keys into actions, show outcome events and the rules this play session
// has generated so far.

import { SessionClient } from "./client.js";
import type { ActionSpec, MoveDirection, RulesBody, StateBody } from "./protocol.js";
import {
  UiSessionView,
  applyConnection,
  applyError,
  applyRules,
  applyState,
  initialView,
} from "./view.js";

const CELL = 30;
const SHAPE_GLYPHS: Record<number, { glyph: string; color: string }> = {
  1: { glyph: "▲", color: "#e6483c" },
  2: { glyph: "●", color: "#9b59d0" },
  3: { glyph: "◆", color: "#2ea44f" },
  4: { glyph: "▬", color: "#e08a00" },
};

const KEY_ACTIONS: Record<string, ActionSpec> = {
  ArrowUp: { kind: "move", direction: "N" },
  ArrowDown: { kind: "move", direction: "S" },
  ArrowLeft: { kind: "move", direction: "W" },
  ArrowRight: { kind: "move", direction: "E" },
  q: { kind: "move", direction: "NW" },
  e: { kind: "move", direction: "NE" },
  z: { kind: "move", direction: "SW" },
  c: { kind: "move", direction: "SE" },
  f: { kind: "fire" },
  t: { kind: "touch" },
  p: { kind: "pushpull" },
  " ": { kind: "wait" },
};

let view: UiSessionView = initialView();
let client: SessionClient | null = null;

const $ = (id: string) => document.getElementById(id)!;
const canvas = $("grid") as HTMLCanvasElement;

function render(): void {
  $("status").textContent =
    view.connection === "open"
      ? `session ${view.session} · episode ${view.episode} · tick ${view.tick} · power ${view.power}` +
        (view.attached ? " · ATTACHED" : "")
      : view.connection + (view.error ? ` (${view.error})` : "");

  const ctx = canvas.getContext("2d")!;
  canvas.width = Math.max(1, view.width) * CELL;
  canvas.height = Math.max(1, view.height) * CELL;
  ctx.fillStyle = "#10141c";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  if (!view.agent) return;

  ctx.strokeStyle = "#232a38";
  for (let x = 0; x <= view.width; x++) {
    ctx.beginPath();
    ctx.moveTo(x * CELL, 0);
    ctx.lineTo(x * CELL, view.height * CELL);
    ctx.stroke();
  }
  for (let y = 0; y <= view.height; y++) {
    ctx.beginPath();
    ctx.moveTo(0, y * CELL);
    ctx.lineTo(view.width * CELL, y * CELL);
    ctx.stroke();
  }

  // world y grows north; the canvas grows down
  const cx = (x: number) => x * CELL + CELL / 2;
  const cy = (y: number) => (view.height - 1 - y) * CELL + CELL / 2;

  if (view.target) {
    ctx.fillStyle = "#d4b106";
    ctx.font = `${CELL * 0.7}px monospace`;
    ctx.textAlign = "center";
    ctx.textBaseline = "middle";
    ctx.fillText("T", cx(view.target[0]), cy(view.target[1]));
  }
  for (const obj of view.objects) {
    const style = SHAPE_GLYPHS[obj.shape] ?? { glyph: "?", color: "#ccc" };
    ctx.fillStyle = style.color;
    ctx.font = `${CELL * 0.66}px monospace`;
    ctx.textAlign = "center";
    ctx.textBaseline = "middle";
    ctx.fillText(style.glyph, cx(obj.pos[0]), cy(obj.pos[1]));
  }
  ctx.fillStyle = view.attached ? "#ff5577" : "#4da3ff";
  ctx.beginPath();
  ctx.arc(cx(view.agent[0]), cy(view.agent[1]), CELL * 0.32, 0, Math.PI * 2);
  ctx.fill();

  const ticker = $("ticker");
  ticker.innerHTML = "";
  for (const entry of [...view.ticker].reverse()) {
    const li = document.createElement("li");
    li.textContent = `e${entry.episode} t${entry.tick} ${entry.text}`;
    ticker.appendChild(li);
  }

  const rules = $("rules") as HTMLTableElement;
  rules.innerHTML = "<tr><th>action</th><th>outcome</th><th>conf</th><th>support</th></tr>";
  for (const rule of view.rules) {
    const tr = document.createElement("tr");
    tr.innerHTML =
      `<td>${rule.action}</td><td>${rule.outcome}</td>` +
      `<td>${rule.confidence.toFixed(2)}</td><td>${rule.support}</td>`;
    rules.appendChild(tr);
  }
  $("rules-context").textContent = view.rulesContext
    ? `context: ${JSON.stringify(view.rulesContext)}`
    : "";
}

async function refreshRules(): Promise<void> {
  if (!client) return;
  const reply = await client.queryRules();
  if (reply.type === "RULES") {
    view = applyRules(view, reply.body as unknown as RulesBody);
    render();
  }
}

async function connect(): Promise<void> {
  const url = ($("url") as HTMLInputElement).value;
  const seedRaw = ($("seed") as HTMLInputElement).value;
  view = applyConnection(view, "connecting");
  render();
  client = new SessionClient(url);
  client.onDisconnect = () => {
    view = applyConnection(view, "closed");
    render();
  };
  try {
    await client.connect();
    await client.hello();
    const reply = await client.open(seedRaw ? Number(seedRaw) : null);
    if (reply.type === "STATE") {
      view = applyState(view, reply.body as unknown as StateBody);
    } else {
      view = applyError(view, String(reply.body.code), String(reply.body.detail));
    }
    render();
    await refreshRules();
  } catch (err) {
    view = applyError(view, "connect", String(err));
    render();
  }
}

async function handleKey(ev: KeyboardEvent): Promise<void> {
  const action = KEY_ACTIONS[ev.key];
  if (!action || !client || view.connection !== "open") return;
  ev.preventDefault();
  const reply = await client.act(action);
  if (reply === null) return; // previous ACT still in flight: one per tick
  if (reply.type === "STATE") {
    view = applyState(view, reply.body as unknown as StateBody);
    render();
    await refreshRules();
  } else if (reply.type === "ERR") {
    view = applyError(view, String(reply.body.code), String(reply.body.detail));
    render();
  }
}

$("connect").addEventListener("click", () => void connect());
document.addEventListener("keydown", (ev) => void handleKey(ev));
render();
