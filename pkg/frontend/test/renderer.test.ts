import { describe, expect, it } from "vitest";

import type { ServerMsg } from "../src/protocol.js";
import { render, worldToScreen } from "../src/renderer.js";
import { applyServerMsg, emptyView, setConnection } from "../src/session.js";
import type { SessionView } from "../src/session.js";
import { helloMsg, RecordingSurface, stateMsg } from "./helpers.js";

function viewFrom(...msgs: ServerMsg[]): SessionView {
  let v = setConnection(emptyView(), "open");
  for (const m of msgs) v = applyServerMsg(v, m);
  return v;
}

describe("scene rendering", () => {
  it("draws workspace, goal, and end-effector each frame", () => {
    const s = new RecordingSurface();
    render(viewFrom(helloMsg(), stateMsg()), s);
    expect(s.byTag("workspace").length).toBe(1);
    expect(s.byTag("goal").length).toBe(1);
    expect(s.byTag("ee").length).toBe(1);
    expect(s.byTag("step-counter")[0].text).toBe("step 1");
  });

  it("never draws the object in a non-debug session", () => {
    const s = new RecordingSurface();
    const v = viewFrom(
      helloMsg(),
      stateMsg({ contact_force: [0.01, 0.0] }), // even while touching it
    );
    render(v, s);
    expect(s.byTag("object")).toEqual([]);
  });

  it("draws the object when the server revealed it", () => {
    const s = new RecordingSurface();
    const v = viewFrom(
      helloMsg({ debug_reveal: true }),
      stateMsg({ obj_pos: [0.05, 0.02] }),
    );
    render(v, s);
    expect(s.byTag("object").length).toBe(1);
    expect(s.byTag("object")[0].center).toEqual(
      worldToScreen([0.05, 0.02], 0.5, s),
    );
  });

  it("zero contact force leaves the meter empty", () => {
    const s = new RecordingSurface();
    render(viewFrom(helloMsg(), stateMsg({ contact_force: [0, 0] })), s);
    expect(s.byTag("force-meter-frame").length).toBe(1);
    expect(s.byTag("force-meter-fill")).toEqual([]);
  });

  it("contact force fills the meter proportionally", () => {
    const s = new RecordingSurface();
    render(viewFrom(helloMsg(), stateMsg({ contact_force: [0.01, 0] })), s);
    const fill = s.byTag("force-meter-fill");
    expect(fill.length).toBe(1);
    expect(fill[0].w).toBeGreaterThan(0);
  });

  it("mode badge names the active branch", () => {
    const s0 = new RecordingSurface();
    render(viewFrom(helloMsg(), stateMsg({ mode: 0 })), s0);
    expect(s0.byTag("mode-badge").some((c) => c.text === "EXPLORATION")).toBe(true);

    const s1 = new RecordingSurface();
    render(viewFrom(helloMsg(), stateMsg({ mode: 1 })), s1);
    expect(s1.byTag("mode-badge").some((c) => c.text === "TASK")).toBe(true);
  });

  it("disconnect keeps the last frame and adds a reconnect banner", () => {
    let v = viewFrom(helloMsg(), stateMsg({ ee_pos: [0.2, 0.1] }));
    v = setConnection(v, "closed");
    const s = new RecordingSurface();
    render(v, s);
    expect(s.byTag("ee").length).toBe(1); // frozen scene still there
    expect(s.byTag("banner").some((c) => c.text?.includes("reconnecting"))).toBe(true);
  });

  it("trail follows prior end-effector positions", () => {
    const v = viewFrom(
      helloMsg(),
      stateMsg({ step: 1, ee_pos: [0.0, 0.0] }),
      stateMsg({ step: 2, ee_pos: [0.1, 0.0] }),
      stateMsg({ step: 3, ee_pos: [0.2, 0.0] }),
    );
    const s = new RecordingSurface();
    render(v, s);
    const trail = s.byTag("trail");
    expect(trail.length).toBe(1);
    expect(trail[0].points?.length).toBe(3);
  });
});

describe("ground-truth independence", () => {
  it("replaying a captured wire log reproduces frames built only from messages", () => {
    // a captured session: hello plus a few states, as raw JSON strings
    const log: string[] = [
      JSON.stringify(helloMsg()),
      JSON.stringify(stateMsg({ step: 1, ee_pos: [-0.1, -0.16] })),
      JSON.stringify(stateMsg({ step: 2, ee_pos: [-0.1, -0.15] })),
      JSON.stringify(stateMsg({ step: 3, ee_pos: [-0.09, -0.15], mode: 1 })),
    ];
    let v = setConnection(emptyView(), "open");
    const eeFromLog: [number, number][] = [];
    for (const raw of log) {
      const msg = JSON.parse(raw) as ServerMsg;
      if (msg.type === "state") eeFromLog.push(msg.ee_pos);
      v = applyServerMsg(v, msg);
    }
    const s = new RecordingSurface();
    render(v, s);

    // every drawn end-effector/trail point maps back to a logged ee_pos
    const logged = new Set(
      eeFromLog.map((p) => JSON.stringify(worldToScreen(p, 0.5, s))),
    );
    for (const c of s.byTag("ee")) {
      expect(logged.has(JSON.stringify(c.center))).toBe(true);
    }
    for (const p of s.byTag("trail")[0].points ?? []) {
      expect(logged.has(JSON.stringify(p))).toBe(true);
    }
    // and nothing about the latent object leaked into the frame
    expect(s.byTag("object")).toEqual([]);
    expect(JSON.stringify(s.calls)).not.toContain("obj_pos");
  });
});
