import { describe, expect, it } from "vitest";

import {
  AlertComposer,
  HOTKEYS,
  MAX_ALERT_TEXT_BYTES,
  SceneModel,
  egoRelativeToWorld,
  textByteLength,
} from "../src/model.js";
import { AlertRequest, AlertResponse, Snapshot } from "../src/types.js";

function snapshot(ids: number[], connected = true): Snapshot {
  return {
    taken_at_ms: 0,
    ego: { x: 10, y: 20, lat: 30, lon: 31, yaw_deg: 0, speed_mps: 8, connected },
    entities: ids.map((id) => ({
      id,
      class: "Car",
      x: 10,
      y: 20 - 30,
      z: 0,
      rel_x: 0,
      rel_y: 0,
      rel_z: 30,
      yaw_deg: 0,
      abs_speed_mps: 8,
      ttc_s: null,
      thw_s: 3.75,
      ttc: "inf",
      thw: "3.8s",
      state: "Safe",
      stale: false,
    })),
    stats: null,
  };
}

describe("SceneModel", () => {
  it("reflects spawn and removal in the very next applied snapshot", () => {
    const model = new SceneModel();
    model.apply(snapshot([1, 2]));
    expect(model.entityIds()).toEqual([1, 2]);
    expect(model.entityRows()).toHaveLength(2);
    expect(model.markers()).toHaveLength(2);

    model.apply(snapshot([2]));
    expect(model.entityIds()).toEqual([2]);
    expect(model.entityRows()).toHaveLength(1);
    expect(model.markers().map((m) => m.id)).toEqual([2]);
  });

  it("row count always equals the snapshot entity count", () => {
    const model = new SceneModel();
    for (const ids of [[], [1], [1, 2, 3], [7], []]) {
      model.apply(snapshot(ids));
      expect(model.entityRows()).toHaveLength(ids.length);
    }
  });

  it("formats infinity-aware metric strings straight from the feed", () => {
    const model = new SceneModel();
    model.apply(snapshot([1]));
    const row = model.entityRows()[0]!;
    expect(row.ttc).toBe("inf");
    expect(row.thw).toBe("3.8s");
    expect(row.state).toBe("Safe");
  });

  it("places markers ego-relative with heading rotation", () => {
    expect(egoRelativeToWorld(0, 0, 0, 0, 30)).toEqual({ x: 0, y: 30 });
    const east = egoRelativeToWorld(0, 0, 90, 0, 30);
    expect(east.x).toBeCloseTo(30, 9);
    expect(east.y).toBeCloseTo(0, 9);
    const lateral = egoRelativeToWorld(5, 5, 0, 2, 0);
    expect(lateral).toEqual({ x: 7, y: 5 });
  });

  it("reports connection from the ego block", () => {
    const model = new SceneModel();
    expect(model.connected()).toBe(false);
    model.apply(snapshot([1], false));
    expect(model.connected()).toBe(false);
    model.apply(snapshot([1], true));
    expect(model.connected()).toBe(true);
  });
});

function composerWith(responses: AlertResponse[] | Error) {
  const sent: AlertRequest[] = [];
  const composer = new AlertComposer(async (req) => {
    sent.push(req);
    if (responses instanceof Error) {
      throw responses;
    }
    const next = responses.shift();
    if (!next) {
      throw new Error("unexpected call");
    }
    return next;
  });
  return { composer, sent };
}

describe("AlertComposer", () => {
  it("hotkey 3 composes a recall with dangerous override", () => {
    const { composer } = composerWith([]);
    const preset = composer.applyHotkey("3");
    expect(preset?.label).toBe("Recall order");
    expect(composer.severity).toBe("recall");
    expect(composer.override).toBe("dangerous");
    expect(composer.text).toBe("Recall order");
  });

  it("all three hotkeys exist with distinct texts", () => {
    expect(HOTKEYS.map((h) => h.key)).toEqual(["1", "2", "3"]);
    expect(new Set(HOTKEYS.map((h) => h.text)).size).toBe(3);
  });

  it("success appends to history exactly once and clears the draft", async () => {
    const { composer, sent } = composerWith([{ ok: true, seq: 4 }]);
    composer.text = "Light rain";
    composer.severity = "info";
    expect(await composer.submit(true)).toBe(true);
    expect(sent).toHaveLength(1);
    expect(composer.history).toHaveLength(1);
    expect(composer.history[0]).toMatchObject({ seq: 4, text: "Light rain", severity: "info" });
    expect(composer.text).toBe("");
    expect(composer.lastError).toBeNull();
  });

  it("oversize text is rejected client-side without a request", async () => {
    const { composer, sent } = composerWith([]);
    composer.text = "x".repeat(MAX_ALERT_TEXT_BYTES + 1);
    expect(composer.blockedBecause(true)).toContain("513 bytes");
    expect(await composer.submit(true)).toBe(false);
    expect(sent).toHaveLength(0);
    expect(composer.history).toHaveLength(0);
  });

  it("byte limit counts UTF-8 bytes, not characters", () => {
    const text = "π".repeat(257); // 2 bytes each -> 514 bytes
    expect(text.length).toBe(257);
    expect(textByteLength(text)).toBe(514);
    const { composer } = composerWith([]);
    composer.text = text;
    expect(composer.blockedBecause(true)).not.toBeNull();
  });

  it("disconnected vehicle blocks submission", async () => {
    const { composer, sent } = composerWith([]);
    composer.text = "hello";
    expect(composer.blockedBecause(false)).toBe("vehicle disconnected");
    expect(await composer.submit(false)).toBe(false);
    expect(sent).toHaveLength(0);
  });

  it("http failure keeps the draft, adds nothing to history, sets the toast", async () => {
    const { composer, sent } = composerWith(new Error("network down"));
    composer.text = "Road flooded";
    expect(await composer.submit(true)).toBe(false);
    expect(sent).toHaveLength(1);
    expect(composer.history).toHaveLength(0);
    expect(composer.text).toBe("Road flooded");
    expect(composer.lastError).toBe("network down");
  });

  it("server rejection keeps the draft too", async () => {
    const { composer } = composerWith([{ ok: false, error: "text exceeds 512 UTF-8 bytes" }]);
    composer.text = "plain";
    expect(await composer.submit(true)).toBe(false);
    expect(composer.history).toHaveLength(0);
    expect(composer.lastError).toContain("512");
  });
});
