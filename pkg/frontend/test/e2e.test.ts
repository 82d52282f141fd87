// End-to-end against a real backend: spawn `skillfield play` on a seeded
// power-supply module, drive the session over the WebSocket bridge the
// way the browser does, and cross-check the rule panel over raw TCP.

import { spawn, ChildProcess } from "node:child_process";
import net from "node:net";
import path from "node:path";
import readline from "node:readline";
import { WebSocket } from "ws";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { SessionClient, type SocketLike } from "../src/client.js";
import type { RulesBody, StateBody } from "../src/protocol.js";
import { applyRules, applyState, initialView, UiSessionView } from "../src/view.js";

const PYTHON = process.env.PYTHON ?? "python3";
const REPO_ROOT = path.resolve(__dirname, "..", "..");
const SEED = 6; // power supply visible from the starting cell

let server: ChildProcess;
let wsUrl = "";
let tcpHost = "";
let tcpPort = 0;

const wsFactory = (url: string) => new WebSocket(url) as unknown as SocketLike;

beforeAll(async () => {
  server = spawn(
    PYTHON,
    ["-m", "skillfield.cli", "play", "--object", "power_supply", "--seed", String(SEED), "--addr", "127.0.0.1:0", "--ws-port", "0"],
    { cwd: REPO_ROOT, stdio: ["ignore", "pipe", "pipe"] },
  );
  const rl = readline.createInterface({ input: server.stdout! });
  await new Promise<void>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("server never announced its ports")), 20000);
    rl.on("line", (line) => {
      const tcp = line.match(/session listening on ([\d.]+):(\d+)/);
      if (tcp) {
        tcpHost = tcp[1]!;
        tcpPort = Number(tcp[2]!);
      }
      const ws = line.match(/websocket bridge on (ws:\/\/[\d.]+:\d+\/)/);
      if (ws) {
        wsUrl = ws[1]!;
        clearTimeout(timer);
        resolve();
      }
    });
    server.on("exit", () => reject(new Error("server exited early")));
  });
}, 30000);

afterAll(() => {
  server?.kill();
});

function stepsToward(agent: [number, number], object: [number, number]): "N" | "NE" | "E" | "SE" | "S" | "SW" | "W" | "NW" {
  const dx = Math.sign(object[0] - agent[0]);
  const dy = Math.sign(object[1] - agent[1]);
  const names: Record<string, string> = {
    "0,1": "N", "1,1": "NE", "1,0": "E", "1,-1": "SE",
    "0,-1": "S", "-1,-1": "SW", "-1,0": "W", "-1,1": "NW",
  };
  return names[`${dx},${dy}`] as ReturnType<typeof stepsToward>;
}

function chebyshev(a: [number, number], b: [number, number]): number {
  return Math.max(Math.abs(a[0] - b[0]), Math.abs(a[1] - b[1]));
}

async function queryOverTcp(body: Record<string, unknown>, openToken: string): Promise<RulesBody> {
  const socket = net.createConnection({ host: tcpHost, port: tcpPort });
  const lines = readline.createInterface({ input: socket });
  const replies: Promise<string>[] = [];
  let resolvers: ((line: string) => void)[] = [];
  lines.on("line", (line) => resolvers.shift()?.(line));
  const request = (type: string, id: number, requestBody: Record<string, unknown>) => {
    const promise = new Promise<string>((resolve) => resolvers.push(resolve));
    replies.push(promise);
    socket.write(JSON.stringify({ body: requestBody, id, type }) + "\n");
    return promise;
  };
  try {
    const opened = JSON.parse(await request("OPEN", 0, { token: openToken }));
    expect(opened.type).toBe("STATE");
    const rules = JSON.parse(await request("QUERY", 1, body));
    expect(rules.type).toBe("RULES");
    return rules.body as RulesBody;
  } finally {
    socket.end();
  }
}

describe("scripted browser session", () => {
  it("two T presses yield a power_gained ticker entry; rule panel matches a direct query verbatim", async () => {
    const client = new SessionClient(wsUrl, wsFactory);
    await client.connect();
    await client.hello();

    let view: UiSessionView = initialView();
    const opened = await client.open(SEED);
    expect(opened.type).toBe("STATE");
    view = applyState(view, opened.body as unknown as StateBody);
    expect(view.tick).toBe(0);
    expect(view.objects.length).toBe(1); // one glyph on screen, nothing else

    // walk up to the supply, as a player following the glyph would
    for (let guard = 0; guard < 30; guard++) {
      const agent = view.agent!;
      const object = view.objects[0]!.pos;
      if (chebyshev(agent, object) <= 1) break;
      const reply = await client.act({ kind: "move", direction: stepsToward(agent, object) });
      expect(reply!.type).toBe("STATE");
      view = applyState(view, reply!.body as unknown as StateBody);
    }
    expect(chebyshev(view.agent!, view.objects[0]!.pos)).toBe(1);

    // press T twice: the second sustained touch pays out
    const first = await client.act({ kind: "touch" });
    view = applyState(view, first!.body as unknown as StateBody);
    const second = await client.act({ kind: "touch" });
    view = applyState(view, second!.body as unknown as StateBody);
    expect(view.power).toBe(1);
    expect(view.ticker.some((entry) => entry.text.startsWith("power_gained"))).toBe(true);

    // the live rule panel
    const panel = await client.queryRules();
    expect(panel.type).toBe("RULES");
    view = applyRules(view, panel.body as unknown as RulesBody);
    expect(view.rules.length).toBeGreaterThan(0);

    // a direct query over the same session (raw TCP, resumed by token)
    // must match the panel verbatim
    const direct = await queryOverTcp(
      { context: panel.body.context, goal_outcomes: null },
      client.sessionToken!,
    );
    expect(direct.entries).toEqual(view.rules);
    expect(direct.context).toEqual(view.rulesContext);

    // a second websocket connection resuming the session agrees too
    const twin = new SessionClient(wsUrl, wsFactory);
    await twin.connect();
    twin.sessionToken = client.sessionToken;
    const resumed = await twin.open();
    expect(resumed.type).toBe("STATE");
    expect((resumed.body as unknown as StateBody).tick).toBe(view.tick);
    const twinPanel = await twin.queryRules();
    expect((twinPanel.body as unknown as RulesBody).entries).toEqual(view.rules);
    twin.close();

    await client.bye();
    client.close();
  }, 30000);

  it("held-down key semantics: only one ACT is in flight at a time", async () => {
    const client = new SessionClient(wsUrl, wsFactory);
    await client.connect();
    const opened = await client.open(SEED);
    const t0 = (opened.body as unknown as StateBody).tick;
    // fire a burst without awaiting, like a key autorepeat would
    const burst = await Promise.all([
      client.act({ kind: "wait" }),
      client.act({ kind: "wait" }),
      client.act({ kind: "wait" }),
    ]);
    const answered = burst.filter((reply) => reply !== null);
    expect(answered.length).toBe(1); // the rest were swallowed by the gate
    expect((answered[0]!.body as unknown as StateBody).tick).toBe(t0 + 1);
    await client.bye();
    client.close();
  });
});
