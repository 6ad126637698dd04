/** DOM bootstrap: wires the headless app core to the canvas and controls. */

import { AnnotationApp } from "./app.js";
import { ServiceClient } from "./client.js";
import { overlayPath, parameterTable } from "./overlay.js";
import type { BranchRef } from "./types.js";

const $ = <T extends HTMLElement>(id: string): T =>
  document.getElementById(id) as T;

const canvas = $<HTMLCanvasElement>("map");
const ctx = canvas.getContext("2d")!;

let app: AnnotationApp | null = null;
let raster: HTMLImageElement | null = null;

const DEFAULT_FIT_CONFIG = {
  initial: {
    couplings: { t11: 0, t12: 0, t21: 4, t22: 9, t31: 0, t32: 0, t41: 3, t42: 12 },
    offsets: { l21: 30, r21: 8, r31: 20, r41: 40 },
    zeeman: 0,
  },
  free: { t11: false, t12: false, t31: false, t32: false, r31: false },
  sign_class: "a",
  tie_t42_to_t32: false,
};

function banner(message: string | null, kind: "error" | "notice"): void {
  const el = $(kind === "error" ? "error-banner" : "notice-banner");
  el.textContent = message ?? "";
  el.style.display = message ? "block" : "none";
}

function draw(): void {
  if (!app) return;
  ctx.fillStyle = "#181820";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  const coords = app.coords;
  if (!coords || !app.state.image) return;

  if (raster) {
    const { zoom, panX, panY } = coords.view;
    ctx.save();
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(raster, panX, panY + canvas.height * zoom - coords.yAxis.count
                  * coords.cellHeight * zoom,
                  coords.xAxis.count * coords.cellWidth * zoom,
                  coords.yAxis.count * coords.cellHeight * zoom);
    ctx.restore();
  }

  for (const curve of app.curves.list()) {
    ctx.strokeStyle = curve.color;
    ctx.lineWidth = 1.5;
    ctx.setLineDash(curve.trackId === app.state.activeCurve ? [5, 3] : []);
    ctx.beginPath();
    curve.points.forEach(([x, y], i) => {
      const { px, py } = coords.dataToPixel(x, y);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.stroke();
    ctx.setLineDash([]);
    for (const [x, y] of curve.points) {
      const { px, py } = coords.dataToPixel(x, y);
      ctx.fillStyle = curve.color;
      ctx.fillRect(px - 2, py - 2, 4, 4);
    }
  }

  if (app.state.overlay) {
    ctx.lineWidth = 2;
    ctx.strokeStyle = "#ffffff";
    for (const curve of app.state.overlay) {
      ctx.beginPath();
      overlayPath(curve, coords).forEach(({ px, py }, i) => {
        if (i === 0) ctx.moveTo(px, py);
        else ctx.lineTo(px, py);
      });
      ctx.stroke();
    }
  }
}

function renderTable(): void {
  const table = $<HTMLTableElement>("params");
  table.innerHTML = "<tr><th>parameter</th><th>value</th><th>stderr</th></tr>";
  if (!app?.state.fitResult) return;
  for (const row of parameterTable(app.state.fitResult)) {
    const tr = table.insertRow();
    tr.insertCell().textContent = row.name;
    tr.insertCell().textContent = String(row.value);
    tr.insertCell().textContent = row.stderr === null ? "-" : String(row.stderr);
  }
}

function renderCurveList(): void {
  const list = $("curves");
  list.innerHTML = "";
  if (!app) return;
  for (const curve of app.curves.list()) {
    const item = document.createElement("li");
    const label = curve.branch
      ? `${curve.branch.sector}:${curve.branch.index}` : "unbound";
    item.textContent = `${curve.trackId} (${label}, ${curve.points.length} pts) `;
    item.style.color = curve.color;
    const bind = document.createElement("button");
    bind.textContent = "bind";
    bind.onclick = () => {
      const value = ($<HTMLInputElement>("branch")).value.trim();
      const [sector, index, spin] = value.split(":");
      const branch: BranchRef | null = value
        ? { sector: sector as BranchRef["sector"], index: Number(index),
            spin_z: Number(spin ?? 0) } : null;
      const result = app!.curves.bindBranch(curve.trackId, branch);
      banner(result.ok ? null : result.reason, "notice");
      refresh();
    };
    const del = document.createElement("button");
    del.textContent = "delete";
    del.onclick = () => { app!.curves.deleteCurve(curve.trackId); refresh(); };
    item.append(bind, del);
    list.append(item);
  }
}

function refresh(): void {
  if (!app) return;
  banner(app.state.error, "error");
  banner(app.state.notice, "notice");
  $("status").textContent =
    `${app.state.phase}${app.state.jobStatus ? ` (${app.state.jobStatus})` : ""}`;
  draw();
  renderTable();
  renderCurveList();
}

async function connect(): Promise<void> {
  const base = ($<HTMLInputElement>("service-url")).value;
  const imageId = ($<HTMLInputElement>("image-id")).value.trim();
  app = new AnnotationApp(new ServiceClient(base));
  app.onChange(refresh);
  const ok = await app.loadImage(imageId, canvas.width, canvas.height);
  if (ok && app.state.image) {
    raster = new Image();
    raster.onload = draw;
    raster.src = app.client.imagePngUrl(imageId, true);
    const { x, y } = app.coords!.extents();
    $("extents").textContent =
      `${app.state.image.x_axis.name}: ${x[0].toFixed(2)} .. ${x[1].toFixed(2)} ` +
      `${app.state.image.x_axis.unit} | ` +
      `${app.state.image.y_axis.name}: ${y[0].toFixed(2)} .. ${y[1].toFixed(2)} ` +
      `${app.state.image.y_axis.unit}`;
  }
  refresh();
}

canvas.addEventListener("click", (event) => {
  if (!app) return;
  const rect = canvas.getBoundingClientRect();
  app.clickAt(event.clientX - rect.left, event.clientY - rect.top);
});

canvas.addEventListener("wheel", (event) => {
  if (!app?.coords) return;
  event.preventDefault();
  const rect = canvas.getBoundingClientRect();
  app.coords.zoomAbout(event.deltaY < 0 ? 1.2 : 1 / 1.2,
                       event.clientX - rect.left, event.clientY - rect.top);
  draw();
}, { passive: false });

$("connect").onclick = () => { void connect(); };
$("new-curve").onclick = () => { app?.startCurve(); refresh(); };
$("finish-curve").onclick = () => { app?.finishCurve(); };
$("undo-vertex").onclick = () => {
  if (app?.state.activeCurve) {
    app.curves.removeLastVertex(app.state.activeCurve);
    refresh();
  }
};
$("reset-view").onclick = () => { app?.coords?.reset(); draw(); };

$("export-seeds").onclick = () => {
  if (!app) return;
  try {
    const blob = new Blob([app.exportSeeds()], { type: "application/json" });
    const link = document.createElement("a");
    link.href = URL.createObjectURL(blob);
    link.download = "seeds.json";
    link.click();
  } catch (error) {
    banner(String(error), "error");
  }
};

$<HTMLInputElement>("import-seeds").onchange = async (event) => {
  const input = event.target as HTMLInputElement;
  const file = input.files?.[0];
  if (file && app) {
    app.importSeeds(await file.text());
    refresh();
  }
  input.value = "";
};

$("submit-fit").onclick = () => {
  if (!app) return;
  let config: Record<string, unknown>;
  try {
    config = JSON.parse(($<HTMLTextAreaElement>("fit-config")).value);
  } catch (error) {
    banner(`fit config is not valid JSON: ${error}`, "error");
    return;
  }
  void app.submitFit(config);
};

$("cancel-fit").onclick = () => { app?.cancelPoll(); };

($<HTMLTextAreaElement>("fit-config")).value =
  JSON.stringify(DEFAULT_FIT_CONFIG, null, 2);
