/** Dashboard entry point: feed -> model -> view, plus the alert form wiring. */

import { SnapshotFeed, FeedStatus } from "./feed.js";
import { AlertComposer, SceneModel } from "./model.js";
import { DashboardView } from "./view.js";
import { AlertRequest, AlertResponse } from "./types.js";

const params = new URLSearchParams(location.search);
const apiBase = params.get("api") ?? `${location.protocol}//${location.host}`;
const wsBase = apiBase.replace(/^http/, "ws");

async function postAlert(alert: AlertRequest): Promise<AlertResponse> {
  const res = await fetch(`${apiBase}/api/alert`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(alert),
  });
  if (!res.ok) {
    return { ok: false, error: `HTTP ${res.status}` };
  }
  return (await res.json()) as AlertResponse;
}

const model = new SceneModel();
const composer = new AlertComposer(postAlert);
const view = new DashboardView(document, composer);
let status: FeedStatus = "connecting";

const feed = new SnapshotFeed({
  wsUrl: `${wsBase}/ws/snapshots`,
  snapshotUrl: `${apiBase}/api/snapshot`,
});
feed.onSnapshot((snap) => {
  model.apply(snap);
  view.render(model, status);
});
feed.onStatus((next) => {
  status = next;
  view.render(model, status);
});

const severitySelect = document.getElementById("alert-severity") as HTMLSelectElement;
const overrideSelect = document.getElementById("alert-override") as HTMLSelectElement;
const textArea = document.getElementById("alert-text") as HTMLTextAreaElement;
const submitButton = document.getElementById("alert-submit") as HTMLButtonElement;

function syncFormFromComposer(): void {
  severitySelect.value = composer.severity;
  overrideSelect.value = composer.override;
  textArea.value = composer.text;
}

severitySelect.addEventListener("change", () => {
  composer.severity = severitySelect.value as AlertRequest["severity"];
});
overrideSelect.addEventListener("change", () => {
  composer.override = overrideSelect.value as AlertRequest["override"];
});
textArea.addEventListener("input", () => {
  composer.text = textArea.value;
  view.render(model, status);
});

async function submit(): Promise<void> {
  const ok = await composer.submit(model.connected());
  if (ok) {
    syncFormFromComposer();
    view.flashOk("alert delivered to downlink queue");
  }
  view.render(model, status);
}

submitButton.addEventListener("click", () => {
  void submit();
});
textArea.addEventListener("keydown", (e) => {
  if (e.key === "Enter" && (e.ctrlKey || e.metaKey)) {
    void submit();
  }
});

document.addEventListener("keydown", (e) => {
  if (e.target === textArea || e.target === severitySelect || e.target === overrideSelect) {
    return; // typing, not a hotkey
  }
  if (composer.applyHotkey(e.key)) {
    syncFormFromComposer();
    void submit();
  }
});

view.renderHotkeyHelp();
view.render(model, status);
feed.start();
