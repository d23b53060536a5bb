// Page assembly: session setup, tabs for the editor / command console /
// dashboard, and the glue between the controllers and the DOM.

import { ApiClient, ServiceError } from "./api.js";
import { CommandConsole } from "./console.js";
import { DeviceDashboard } from "./dashboard.js";
import { AnnotationEditor } from "./editor.js";
import type { DeviceEntry } from "./types.js";

const api = new ApiClient("");

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function banner(message: string, isError: boolean): void {
  const box = el<HTMLDivElement>("banner");
  box.textContent = message;
  box.className = isError ? "banner error" : "banner ok";
  box.style.display = "block";
  setTimeout(() => (box.style.display = "none"), 4000);
}

let editor: AnnotationEditor | null = null;
let commandConsole: CommandConsole | null = null;

async function openSession(sessionId: string): Promise<void> {
  el<HTMLSpanElement>("session-label").textContent = sessionId;
  editor = new AnnotationEditor(api, sessionId, el<HTMLCanvasElement>("editor-canvas"), banner);
  commandConsole = new CommandConsole(api, sessionId);
  try {
    await editor.load();
  } catch (err) {
    if (err instanceof ServiceError) banner(`${err.kind}: ${err.payload.detail}`, true);
    else banner(String(err), true);
  }
}

async function setupSession(): Promise<void> {
  const existing = el<HTMLInputElement>("session-input").value.trim();
  if (existing) {
    await openSession(existing);
    return;
  }
  const created = await api.createSession();
  const text = el<HTMLInputElement>("inventory-input").value.trim();
  if (text) {
    await api.setInventory(created.session_id, text);
  }
  const file = el<HTMLInputElement>("image-input").files?.[0];
  if (file) {
    await api.uploadImage(created.session_id, file);
  }
  await openSession(created.session_id);
}

function renderConsole(): void {
  if (!commandConsole) return;
  const view = commandConsole.view;
  const out = el<HTMLDivElement>("console-output");
  out.innerHTML = "";
  if (view.phase === "resolved") {
    editor?.highlight(view.highlighted);
    for (const [i, cmd] of view.outcome.commands.entries()) {
      const result = view.outcome.results[i];
      const line = document.createElement("div");
      const status = result ? result.status : "dry-run";
      const badge = result?.error_kind ? ` (${result.error_kind})` : "";
      line.className = `result ${status === "success" ? "ok" : "warn"}`;
      line.textContent = `${cmd.uuid} ← ${JSON.stringify(cmd.action)} → ${status}${badge}`;
      out.appendChild(line);
    }
  } else if (view.phase === "ambiguous") {
    const hint = document.createElement("div");
    hint.textContent = `ambiguous: ${view.detail} — pick one:`;
    out.appendChild(hint);
    for (const candidate of view.candidates) {
      const button = document.createElement("button");
      button.textContent = candidate.name;
      button.className = "candidate";
      button.onclick = async () => {
        await commandConsole!.pickCandidate(candidate);
        renderConsole();
      };
      out.appendChild(button);
    }
  } else if (view.phase === "error") {
    const line = document.createElement("div");
    line.className = "result warn";
    line.textContent = `${view.kind}: ${view.detail}`;
    out.appendChild(line);
  }
}

function renderDevices(devices: DeviceEntry[], stale: boolean): void {
  el<HTMLSpanElement>("stale-badge").style.display = stale ? "inline" : "none";
  const tbody = el<HTMLTableSectionElement>("device-rows");
  tbody.innerHTML = "";
  for (const device of devices) {
    const row = document.createElement("tr");
    const bright = device.state.brightness != null ? String(device.state.brightness) : "–";
    const speed = device.state.speed != null ? String(device.state.speed) : "–";
    row.innerHTML =
      `<td>${device.device_id}</td><td>${device.type}</td>` +
      `<td>${device.state.on ? "on" : "off"}</td><td>${bright}</td><td>${speed}</td>` +
      `<td>${device.online ? "online" : "offline"}</td>`;
    tbody.appendChild(row);
  }
}

function main(): void {
  el<HTMLButtonElement>("open-session").onclick = () =>
    setupSession().catch((err) => banner(String(err), true));

  el<HTMLButtonElement>("save-annotations").onclick = () => editor?.save();
  el<HTMLButtonElement>("refresh-annotations").onclick = () => editor?.refresh();
  el<HTMLButtonElement>("delete-box").onclick = () => editor?.deleteSelected();
  el<HTMLButtonElement>("confirm-box").onclick = () => editor?.confirmSelected();
  el<HTMLButtonElement>("add-record").onclick = () => {
    const label = el<HTMLInputElement>("new-label").value.trim() || "light";
    editor?.addRecord(label);
  };
  el<HTMLButtonElement>("add-landmark").onclick = () => {
    const name = el<HTMLInputElement>("new-landmark").value.trim();
    if (name) editor?.addLandmark(name);
  };
  el<HTMLButtonElement>("relabel-box").onclick = () => {
    const label = el<HTMLInputElement>("new-label").value.trim();
    if (label) editor?.relabelSelected(label);
  };

  el<HTMLFormElement>("command-form").onsubmit = (e) => {
    e.preventDefault();
    const text = el<HTMLInputElement>("command-input").value.trim();
    if (!text || !commandConsole) return;
    void commandConsole.submit(text).then(renderConsole);
  };

  const dashboard = new DeviceDashboard(api, (snapshot) =>
    renderDevices(snapshot.devices, snapshot.stale),
  );
  dashboard.start();
}

main();
