// Pure render model: the view is a fold over received STATE/RULES bodies.
// Replaying the same message stream always reproduces the same view.

import type { EventRow, PerceptRow, RuleRow, RulesBody, StateBody } from "./protocol.js";

export interface TickerEntry {
  episode: number;
  tick: number;
  text: string;
}

export interface UiSessionView {
  connection: "idle" | "connecting" | "open" | "closed" | "error";
  error: string | null;
  session: string | null;
  episode: number;
  tick: number;
  width: number;
  height: number;
  agent: [number, number] | null;
  target: [number, number] | null;
  power: number;
  attached: boolean;
  alive: boolean;
  objects: StateBody["view"]["objects"];
  percepts: PerceptRow[];
  ticker: TickerEntry[];
  rules: RuleRow[];
  rulesContext: Record<string, unknown> | null;
}

export const TICKER_LIMIT = 60;

export function initialView(): UiSessionView {
  return {
    connection: "idle",
    error: null,
    session: null,
    episode: 0,
    tick: 0,
    width: 0,
    height: 0,
    agent: null,
    target: null,
    power: 0,
    attached: false,
    alive: true,
    objects: [],
    percepts: [],
    ticker: [],
    rules: [],
    rulesContext: null,
  };
}

export function eventText(event: EventRow): string {
  let text = event.kind;
  if (event.object_id !== undefined && event.object_id !== null) {
    text += ` #${event.object_id}`;
  }
  if (event.cells !== undefined && event.cells !== null) {
    text += ` (${event.cells} cells)`;
  }
  return text;
}

export function applyState(view: UiSessionView, body: StateBody): UiSessionView {
  const entries = body.events.map((event) => ({
    episode: body.episode,
    tick: body.tick,
    text: eventText(event),
  }));
  const ticker = view.ticker.concat(entries).slice(-TICKER_LIMIT);
  return {
    ...view,
    connection: "open",
    error: null,
    session: body.session,
    episode: body.episode,
    tick: body.tick,
    width: body.view.width,
    height: body.view.height,
    agent: body.view.agent,
    target: body.view.target,
    power: body.view.power,
    attached: body.view.attached,
    alive: body.view.alive,
    objects: body.view.objects,
    percepts: body.percepts,
    ticker,
  };
}

export function applyRules(view: UiSessionView, body: RulesBody): UiSessionView {
  // Rendered verbatim: ordering and values come from the server response.
  return { ...view, rules: body.entries, rulesContext: body.context };
}

export function applyError(view: UiSessionView, code: string, detail: string): UiSessionView {
  return { ...view, connection: "error", error: `${code}: ${detail}` };
}

export function applyConnection(
  view: UiSessionView,
  connection: UiSessionView["connection"],
): UiSessionView {
  return { ...view, connection };
}
