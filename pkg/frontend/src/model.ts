/**
 * DOM-free view models: the live scene state and the alert composer.
 *
 * Everything the canvas, table, and form render is computed here so the
 * logic tests run without a browser.
 */

import {
  AlertRequest,
  AlertResponse,
  EntityView,
  Override,
  Severity,
  Snapshot,
} from "./types.js";

export const MAX_ALERT_TEXT_BYTES = 512;

const STATE_COLORS: Record<string, string> = {
  Safe: "#2e9e4f",
  Hazardous: "#d9a312",
  Dangerous: "#d2382e",
};

export interface Marker {
  id: number;
  kind: "Car" | "Pedestrian";
  /** world-frame meters: ego position plus the heading-rotated relative offset */
  x: number;
  y: number;
  headingDeg: number;
  color: string;
  stale: boolean;
  label: string;
}

export interface EntityRow {
  id: number;
  kind: string;
  distance: string;
  speed: string;
  yaw: string;
  ttc: string;
  thw: string;
  state: string;
  color: string;
  stale: boolean;
}

/** Heading-rotate a (right, forward) offset into world (east, north). */
export function egoRelativeToWorld(
  egoX: number,
  egoY: number,
  egoYawDeg: number,
  relRight: number,
  relForward: number,
): { x: number; y: number } {
  const yaw = (egoYawDeg * Math.PI) / 180;
  return {
    x: egoX + relRight * Math.cos(yaw) + relForward * Math.sin(yaw),
    y: egoY - relRight * Math.sin(yaw) + relForward * Math.cos(yaw),
  };
}

export class SceneModel {
  snapshot: Snapshot | null = null;
  generation = 0;

  apply(snapshot: Snapshot): void {
    this.snapshot = snapshot;
    this.generation += 1;
  }

  connected(): boolean {
    return this.snapshot?.ego.connected ?? false;
  }

  entityIds(): number[] {
    return (this.snapshot?.entities ?? []).map((e) => e.id);
  }

  /** One table row per entity in the latest snapshot, ids ascending. */
  entityRows(): EntityRow[] {
    return (this.snapshot?.entities ?? []).map((e: EntityView) => ({
      id: e.id,
      kind: e.class,
      distance: `${e.rel_z.toFixed(1)} m`,
      speed: `${e.abs_speed_mps.toFixed(1)} m/s`,
      yaw: `${Math.round(e.yaw_deg)}°`,
      ttc: e.ttc,
      thw: e.thw,
      state: e.state,
      color: STATE_COLORS[e.state] ?? "#888",
      stale: e.stale,
    }));
  }

  /** Scene markers in world meters for the top-down canvas. */
  markers(): Marker[] {
    const snap = this.snapshot;
    if (!snap) {
      return [];
    }
    return snap.entities.map((e) => {
      const pos = egoRelativeToWorld(snap.ego.x, snap.ego.y, snap.ego.yaw_deg, e.rel_x, e.rel_z);
      return {
        id: e.id,
        kind: e.class,
        x: pos.x,
        y: pos.y,
        headingDeg: snap.ego.yaw_deg + e.yaw_deg,
        color: STATE_COLORS[e.state] ?? "#888",
        stale: e.stale,
        label: `#${e.id} ${e.ttc}/${e.thw}`,
      };
    });
  }
}

export interface SentAlert {
  seq: number;
  severity: Severity;
  override: Override;
  text: string;
  at: number;
}

export interface HotkeyPreset {
  key: "1" | "2" | "3";
  label: string;
  severity: Severity;
  override: Override;
  text: string;
}

export const HOTKEYS: HotkeyPreset[] = [
  { key: "1", label: "Weather warning", severity: "warning", override: "none", text: "Weather warning" },
  { key: "2", label: "Road hazard ahead", severity: "warning", override: "hazardous", text: "Road hazard ahead" },
  { key: "3", label: "Recall order", severity: "recall", override: "dangerous", text: "Recall order" },
];

export function textByteLength(text: string): number {
  return new TextEncoder().encode(text).length;
}

export type PostAlert = (alert: AlertRequest) => Promise<AlertResponse>;

/**
 * Alert form state machine: hotkey presets, byte-limit validation, a
 * submission history that records each accepted alert exactly once, and
 * draft retention on failure.
 */
export class AlertComposer {
  severity: Severity = "info";
  override: Override = "none";
  text = "";
  history: SentAlert[] = [];
  lastError: string | null = null;
  busy = false;

  constructor(private readonly postAlert: PostAlert) {}

  applyHotkey(key: string): HotkeyPreset | null {
    const preset = HOTKEYS.find((h) => h.key === key) ?? null;
    if (preset) {
      this.severity = preset.severity;
      this.override = preset.override;
      this.text = preset.text;
    }
    return preset;
  }

  /** Reason the form cannot submit right now, or null when it can. */
  blockedBecause(connected: boolean): string | null {
    if (!connected) {
      return "vehicle disconnected";
    }
    const bytes = textByteLength(this.text);
    if (bytes > MAX_ALERT_TEXT_BYTES) {
      return `text is ${bytes} bytes, limit ${MAX_ALERT_TEXT_BYTES}`;
    }
    if (this.busy) {
      return "submission in flight";
    }
    return null;
  }

  async submit(connected: boolean): Promise<boolean> {
    const blocked = this.blockedBecause(connected);
    if (blocked) {
      this.lastError = blocked;
      return false;
    }
    const request: AlertRequest = { severity: this.severity, override: this.override, text: this.text };
    this.busy = true;
    try {
      const response = await this.postAlert(request);
      if (!response.ok) {
        this.lastError = response.error ?? "server rejected the alert";
        return false;  // draft retained for correction
      }
      this.history.push({
        seq: response.seq ?? -1,
        severity: request.severity,
        override: request.override,
        text: request.text,
        at: Date.now(),
      });
      this.lastError = null;
      this.text = "";
      this.override = "none";
      return true;
    } catch (err) {
      this.lastError = err instanceof Error ? err.message : String(err);
      return false;  // draft retained
    } finally {
      this.busy = false;
    }
  }
}
