/**
 * DOM/canvas bindings for the dashboard. All scene math lives in
 * model.ts; this layer only draws and wires events.
 */

import { AlertComposer, HOTKEYS, Marker, SceneModel, textByteLength, MAX_ALERT_TEXT_BYTES } from "./model.js";
import { FeedStatus } from "./feed.js";
import { Snapshot } from "./types.js";

/** Top-down scene canvas with view-local meters->pixels scale, pan, zoom. */
export class SceneCanvas {
  private scale = 6; // px per meter
  private panX = 0; // world meters offset of the view center
  private panY = 0;
  private follow = true;
  private dragging = false;
  private dragLast: [number, number] | null = null;

  constructor(private readonly canvas: HTMLCanvasElement) {
    canvas.addEventListener("wheel", (e) => {
      e.preventDefault();
      const factor = e.deltaY < 0 ? 1.15 : 1 / 1.15;
      this.scale = Math.min(60, Math.max(0.8, this.scale * factor));
    });
    canvas.addEventListener("mousedown", (e) => {
      this.dragging = true;
      this.dragLast = [e.clientX, e.clientY];
      this.follow = false;
    });
    window.addEventListener("mouseup", () => {
      this.dragging = false;
      this.dragLast = null;
    });
    window.addEventListener("mousemove", (e) => {
      if (!this.dragging || !this.dragLast) {
        return;
      }
      this.panX -= (e.clientX - this.dragLast[0]) / this.scale;
      this.panY += (e.clientY - this.dragLast[1]) / this.scale;
      this.dragLast = [e.clientX, e.clientY];
    });
    canvas.addEventListener("dblclick", () => {
      this.follow = true;
    });
  }

  render(model: SceneModel): void {
    const snap = model.snapshot;
    const ctx = this.canvas.getContext("2d");
    if (!ctx) {
      return;
    }
    const { width, height } = this.canvas;
    ctx.fillStyle = "#10151c";
    ctx.fillRect(0, 0, width, height);
    if (!snap) {
      return;
    }
    if (this.follow) {
      this.panX = snap.ego.x;
      this.panY = snap.ego.y;
    }
    const toPx = (wx: number, wy: number): [number, number] => [
      width / 2 + (wx - this.panX) * this.scale,
      height / 2 - (wy - this.panY) * this.scale,
    ];

    this.drawGrid(ctx, width, height);
    for (const marker of model.markers()) {
      this.drawMarker(ctx, toPx, marker);
    }
    this.drawEgo(ctx, toPx, snap);
  }

  private drawGrid(ctx: CanvasRenderingContext2D, width: number, height: number): void {
    const stepM = this.scale > 12 ? 5 : 10;
    const stepPx = stepM * this.scale;
    ctx.strokeStyle = "#1d2633";
    ctx.lineWidth = 1;
    const offX = (width / 2 - this.panX * this.scale) % stepPx;
    const offY = (height / 2 + this.panY * this.scale) % stepPx;
    for (let x = offX; x < width; x += stepPx) {
      ctx.beginPath();
      ctx.moveTo(x, 0);
      ctx.lineTo(x, height);
      ctx.stroke();
    }
    for (let y = offY; y < height; y += stepPx) {
      ctx.beginPath();
      ctx.moveTo(0, y);
      ctx.lineTo(width, y);
      ctx.stroke();
    }
  }

  private drawEgo(
    ctx: CanvasRenderingContext2D,
    toPx: (x: number, y: number) => [number, number],
    snap: Snapshot,
  ): void {
    const [x, y] = toPx(snap.ego.x, snap.ego.y);
    const yaw = (snap.ego.yaw_deg * Math.PI) / 180;
    ctx.save();
    ctx.translate(x, y);
    ctx.rotate(yaw);
    ctx.fillStyle = snap.ego.connected ? "#4da3ff" : "#5a6573";
    ctx.beginPath();
    ctx.moveTo(0, -12);
    ctx.lineTo(8, 10);
    ctx.lineTo(-8, 10);
    ctx.closePath();
    ctx.fill();
    ctx.restore();
    ctx.fillStyle = "#9fb4cc";
    ctx.font = "11px system-ui";
    ctx.fillText(`ego ${snap.ego.speed_mps.toFixed(1)} m/s`, x + 12, y + 4);
  }

  private drawMarker(
    ctx: CanvasRenderingContext2D,
    toPx: (x: number, y: number) => [number, number],
    marker: Marker,
  ): void {
    const [x, y] = toPx(marker.x, marker.y);
    ctx.save();
    ctx.globalAlpha = marker.stale ? 0.45 : 1.0;
    ctx.translate(x, y);
    ctx.fillStyle = marker.color;
    if (marker.kind === "Car") {
      ctx.rotate((marker.headingDeg * Math.PI) / 180);
      ctx.fillRect(-6, -10, 12, 20);
      ctx.fillStyle = "#0c0f14";
      ctx.fillRect(-4, -9, 8, 4); // windshield marks the heading
    } else {
      ctx.beginPath();
      ctx.arc(0, 0, 6, 0, Math.PI * 2);
      ctx.fill();
    }
    ctx.restore();
    // yaw arrow
    const arrow = ((marker.headingDeg - 90) * Math.PI) / 180;
    ctx.strokeStyle = marker.color;
    ctx.beginPath();
    ctx.moveTo(x, y);
    ctx.lineTo(x + 14 * Math.cos(arrow), y + 14 * Math.sin(arrow));
    ctx.stroke();
    ctx.globalAlpha = 1.0;
    ctx.fillStyle = "#c7d4e4";
    ctx.font = "11px system-ui";
    ctx.fillText(marker.label, x + 10, y - 10);
  }
}

export class DashboardView {
  private readonly canvas: SceneCanvas;
  private readonly banner: HTMLElement;
  private readonly tableBody: HTMLElement;
  private readonly statsPanel: HTMLElement;
  private readonly history: HTMLElement;
  private readonly toast: HTMLElement;

  constructor(private readonly root: Document, private readonly composer: AlertComposer) {
    this.canvas = new SceneCanvas(root.getElementById("scene") as HTMLCanvasElement);
    this.banner = root.getElementById("banner")!;
    this.tableBody = root.getElementById("entity-rows")!;
    this.statsPanel = root.getElementById("stats")!;
    this.history = root.getElementById("alert-history")!;
    this.toast = root.getElementById("toast")!;
  }

  render(model: SceneModel, status: FeedStatus): void {
    this.canvas.render(model);
    this.renderBanner(model, status);
    this.renderTable(model);
    this.renderStats(model);
    this.renderForm(model);
    this.renderHistory();
  }

  private renderBanner(model: SceneModel, status: FeedStatus): void {
    const connected = model.connected();
    if (status !== "live") {
      this.banner.textContent = "feed lost, retrying (polling fallback active)";
      this.banner.className = "banner warn";
    } else if (!connected) {
      this.banner.textContent = "twin online, vehicle disconnected";
      this.banner.className = "banner idle";
    } else {
      this.banner.textContent = "live";
      this.banner.className = "banner ok";
    }
  }

  private renderTable(model: SceneModel): void {
    const rows = model.entityRows();
    this.tableBody.innerHTML = "";
    for (const row of rows) {
      const tr = this.root.createElement("tr");
      if (row.stale) {
        tr.classList.add("stale");
      }
      const badge = `<span class="badge" style="background:${row.color}">${row.state}</span>`;
      tr.innerHTML =
        `<td>${row.id}</td><td>${row.kind}</td><td>${row.distance}</td>` +
        `<td>${row.speed}</td><td>${row.yaw}</td><td>${row.ttc}</td><td>${row.thw}</td><td>${badge}</td>`;
      this.tableBody.appendChild(tr);
    }
  }

  private renderStats(model: SceneModel): void {
    const stats = model.snapshot?.stats;
    if (!stats) {
      this.statsPanel.textContent = "no link statistics yet";
      return;
    }
    this.statsPanel.innerHTML =
      `<div>latency min <b>${stats.latency_min_ms.toFixed(1)} ms</b></div>` +
      `<div>latency max <b>${stats.latency_max_ms.toFixed(1)} ms</b></div>` +
      `<div>latency mean <b>${stats.latency_mean_ms.toFixed(1)} ms</b></div>` +
      `<div>latency std <b>${stats.latency_std_ms.toFixed(1)} ms</b></div>` +
      `<div>loss <b>${(stats.loss_rate * 100).toFixed(2)}%</b></div>` +
      `<div>received <b>${stats.received}/${stats.sent_estimate}</b></div>`;
  }

  private renderForm(model: SceneModel): void {
    const submit = this.root.getElementById("alert-submit") as HTMLButtonElement;
    const text = this.root.getElementById("alert-text") as HTMLTextAreaElement;
    const counter = this.root.getElementById("alert-bytes")!;
    const blocked = this.composer.blockedBecause(model.connected());
    submit.disabled = blocked !== null;
    submit.title = blocked ?? "send to the vehicle";
    counter.textContent = `${textByteLength(text.value)}/${MAX_ALERT_TEXT_BYTES} bytes`;
    if (this.composer.lastError) {
      this.toast.textContent = this.composer.lastError;
      this.toast.className = "toast error";
    }
  }

  private renderHistory(): void {
    this.history.innerHTML = "";
    for (const sent of [...this.composer.history].reverse().slice(0, 20)) {
      const li = this.root.createElement("li");
      const when = new Date(sent.at).toLocaleTimeString();
      li.textContent = `[${when}] ${sent.severity}${sent.override !== "none" ? `/${sent.override}` : ""}: ${sent.text}`;
      this.history.appendChild(li);
    }
  }

  flashOk(message: string): void {
    this.toast.textContent = message;
    this.toast.className = "toast ok";
  }

  renderHotkeyHelp(): void {
    const help = this.root.getElementById("hotkey-help")!;
    help.textContent = HOTKEYS.map((h) => `${h.key}: ${h.label}`).join("   ");
  }
}
