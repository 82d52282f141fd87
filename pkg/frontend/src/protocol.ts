// Message schema shared with the backend: one JSON envelope per WebSocket
// text frame, request/response paired by id.

export interface Envelope {
  type: string;
  id: number;
  body: Record<string, unknown>;
}

export interface PerceptRow {
  id: number;
  shape: number;
  distance: number;
  octant: string;
  alignment: string;
}

export interface EventRow {
  kind: string;
  object_id?: number;
  cells?: number;
}

export interface GridObject {
  id: number;
  shape: number;
  pos: [number, number];
}

export interface ViewBlock {
  width: number;
  height: number;
  agent: [number, number];
  target: [number, number];
  power: number;
  attached: boolean;
  alive: boolean;
  objects: GridObject[];
}

export interface StateBody {
  session: string;
  episode: number;
  tick: number;
  percepts: PerceptRow[];
  events: EventRow[];
  view: ViewBlock;
}

export interface RuleRow {
  action: string;
  outcome: string;
  confidence: number;
  support: number;
}

export interface RulesBody {
  context: Record<string, unknown>;
  entries: RuleRow[];
}

export type MoveDirection = "N" | "NE" | "E" | "SE" | "S" | "SW" | "W" | "NW";

export type ActionSpec =
  | { kind: "move"; direction: MoveDirection }
  | { kind: "fire" | "touch" | "pushpull" | "wait" };

export function encodeEnvelope(msg: Envelope): string {
  return JSON.stringify({ body: msg.body, id: msg.id, type: msg.type });
}

export function decodeEnvelope(raw: string): Envelope {
  const parsed = JSON.parse(raw) as Partial<Envelope>;
  if (
    typeof parsed !== "object" ||
    parsed === null ||
    typeof parsed.type !== "string" ||
    typeof parsed.id !== "number" ||
    typeof parsed.body !== "object" ||
    parsed.body === null
  ) {
    throw new Error("malformed envelope");
  }
  return { type: parsed.type, id: parsed.id, body: parsed.body as Record<string, unknown> };
}
