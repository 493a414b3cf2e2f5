import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { BUFFER_TTL_MS, RECONNECT_DELAY_MS, TeleopClient } from "../src/client.js";
import { FakeSocket, helloMsg, stateMsg } from "./helpers.js";

function connected(): { client: TeleopClient; sock: FakeSocket } {
  const sock = new FakeSocket();
  const client = new TeleopClient(() => sock, { reconnect: false });
  client.connect();
  sock.open();
  sock.receive(helloMsg());
  return { client, sock };
}

describe("action streaming", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("streams zero actions at the server tick rate while idle", () => {
    const { sock } = connected();
    vi.advanceTimersByTime(250); // five 50 ms ticks at 20 Hz
    const actions = sock.sentActions();
    expect(actions.length).toBe(5);
    for (const a of actions) expect([a.dx, a.dy]).toEqual([0, 0]);
  });

  it("held arrow key turns the stream into full-bound displacements", () => {
    const { client, sock } = connected();
    client.keydown("ArrowUp");
    vi.advanceTimersByTime(200);
    const acts = sock.sentActions();
    const moving = acts.filter((a) => a.dy > 0);
    expect(moving.length).toBeGreaterThanOrEqual(4);
    for (const a of moving) expect(a.dy).toBeCloseTo(0.01, 12);
    client.keyup("ArrowUp");
    sock.sent = [];
    vi.advanceTimersByTime(100);
    for (const a of sock.sentActions()) expect(a.dy).toBe(0);
  });

  it("key event reaches the wire within one tick (50 ms)", () => {
    const { client, sock } = connected();
    const before = sock.sent.length;
    const t0 = Date.now();
    client.keydown("ArrowRight");
    const newSends = sock.sent.slice(before);
    expect(newSends.length).toBeGreaterThanOrEqual(1);
    const latency = newSends[0].at - t0;
    expect(latency).toBeLessThanOrEqual(50);
    const msg = JSON.parse(newSends[0].raw);
    expect(msg.type).toBe("action");
    expect(msg.dx).toBeCloseTo(0.01, 12);
  });

  it("one spacebar press sends exactly one toggle_mode", () => {
    const { client, sock } = connected();
    client.keydown("Space");
    client.keydown("Space"); // auto-repeat
    client.keydown("Space");
    client.keyup("Space");
    expect(sock.sentOfType("toggle_mode").length).toBe(1);
  });

  it("reset and save requests go out as protocol messages", () => {
    const { client, sock } = connected();
    client.requestReset(42);
    client.requestSave();
    expect(sock.sentOfType("reset")).toEqual([{ type: "reset", seed: 42 }]);
    expect(sock.sentOfType("save_episode").length).toBe(1);
  });
});

describe("view synchronization", () => {
  it("state frames update the view and wire log", () => {
    const { client, sock } = connected();
    sock.receive(stateMsg({ step: 5, mode: 1, success: true }));
    expect(client.view.state?.step).toBe(5);
    expect(client.view.state?.mode).toBe(1);
    expect(client.wireLog.length).toBe(2); // hello + state
  });

  it("malformed inbound frames are ignored, session continues", () => {
    const { client, sock } = connected();
    sock.onmessage?.({ data: "garbage{{{" });
    sock.receive(stateMsg({ step: 9 }));
    expect(client.view.state?.step).toBe(9);
  });

  it("a non-debug session's wire log never mentions the object position", () => {
    const { client, sock } = connected();
    for (let i = 0; i < 50; i++) {
      sock.receive(stateMsg({ step: i, contact_force: [0.003, 0.001] }));
    }
    sock.receive({ type: "mode", mode: 1 });
    sock.receive({ type: "saved", count: 1 });
    expect(client.wireLog.length).toBeGreaterThan(50);
    for (const raw of client.wireLog) {
      expect(raw).not.toContain("obj_pos");
    }
  });
});

describe("disconnect handling", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("buffers input while down and flushes on reconnect within the TTL", () => {
    const sock = new FakeSocket();
    const client = new TeleopClient(() => sock, { reconnect: false });
    client.connect(); // socket still CONNECTING, not open
    client.keydown("Space");
    expect(sock.sentOfType("toggle_mode").length).toBe(0);
    vi.advanceTimersByTime(BUFFER_TTL_MS / 2);
    sock.open();
    expect(sock.sentOfType("toggle_mode").length).toBe(1);
  });

  it("drops buffered input older than one second", () => {
    const sock = new FakeSocket();
    const client = new TeleopClient(() => sock, { reconnect: false });
    client.connect();
    client.keydown("Space");
    vi.advanceTimersByTime(BUFFER_TTL_MS + 500);
    sock.open();
    expect(sock.sentOfType("toggle_mode").length).toBe(0);
  });

  it("marks the view closed and reconnects after the delay", () => {
    const sockets: FakeSocket[] = [];
    const client = new TeleopClient(() => {
      const s = new FakeSocket();
      sockets.push(s);
      return s;
    });
    client.connect();
    sockets[0].open();
    sockets[0].receive(helloMsg());
    sockets[0].close();
    expect(client.view.connection).toBe("closed");
    vi.advanceTimersByTime(RECONNECT_DELAY_MS);
    expect(sockets.length).toBe(2);
    sockets[1].open();
    expect(client.view.connection).toBe("open");
    client.stop();
  });

  it("stops streaming actions after the socket closes", () => {
    const { client, sock } = connected();
    vi.advanceTimersByTime(100);
    const sentWhileOpen = sock.sentActions().length;
    expect(sentWhileOpen).toBeGreaterThan(0);
    sock.close();
    vi.advanceTimersByTime(500);
    expect(sock.sentActions().length).toBe(sentWhileOpen);
    client.stop();
  });
});
