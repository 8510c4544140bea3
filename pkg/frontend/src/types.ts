/**
 * Wire types for the twin-server JSON API.
 *
 * Infinite TTC/THW arrive as null in ttc_s/thw_s with the display string
 * ("3.4s" / "inf") carried alongside in ttc/thw.
 */

export type SafetyStateName = "Safe" | "Hazardous" | "Dangerous";
export type ObjectClassName = "Car" | "Pedestrian";

export interface EntityView {
  id: number;
  class: ObjectClassName;
  x: number;
  y: number;
  z: number;
  rel_x: number;
  rel_y: number;
  rel_z: number;
  yaw_deg: number;
  abs_speed_mps: number;
  ttc_s: number | null;
  thw_s: number | null;
  ttc: string;
  thw: string;
  state: SafetyStateName;
  stale: boolean;
}

export interface EgoView {
  x: number;
  y: number;
  lat: number;
  lon: number;
  yaw_deg: number;
  speed_mps: number;
  connected: boolean;
}

export interface LinkStatsView {
  latency_min_ms: number;
  latency_max_ms: number;
  latency_mean_ms: number;
  latency_std_ms: number;
  loss_rate: number;
  sent_estimate: number;
  received: number;
}

export interface Snapshot {
  taken_at_ms: number;
  ego: EgoView;
  entities: EntityView[];
  stats: LinkStatsView | null;
}

export type Severity = "info" | "warning" | "recall";
export type Override = "none" | "safe" | "hazardous" | "dangerous";

export interface AlertRequest {
  severity: Severity;
  override: Override;
  text: string;
}

export interface AlertResponse {
  ok: boolean;
  seq?: number;
  error?: string;
}

/** Narrow an arbitrary JSON document into a Snapshot; throws on shape errors. */
export function parseSnapshot(doc: unknown): Snapshot {
  if (typeof doc !== "object" || doc === null) {
    throw new Error("snapshot must be an object");
  }
  const record = doc as Record<string, unknown>;
  const ego = record["ego"] as Record<string, unknown> | undefined;
  const entities = record["entities"];
  if (!ego || !Array.isArray(entities)) {
    throw new Error("snapshot missing ego or entities");
  }
  for (const entity of entities as Array<Record<string, unknown>>) {
    if (typeof entity["id"] !== "number" || typeof entity["state"] !== "string") {
      throw new Error("entity missing id/state");
    }
  }
  return doc as Snapshot;
}
