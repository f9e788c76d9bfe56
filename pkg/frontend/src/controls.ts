import type { ServiceClient } from "./api.js";
import { ApiError } from "./api.js";
import { MutationQueue } from "./debounce.js";
import type { EditorState } from "./state.js";
import { SLIDER_RANGES, clampToRange, type SliderKey } from "./types.js";

function sliderRow(label: string, key: SliderKey, value: number): {
  row: HTMLDivElement;
  input: HTMLInputElement;
  error: HTMLSpanElement;
} {
  const r = SLIDER_RANGES[key];
  const row = document.createElement("div");
  row.className = "control-row";
  const lab = document.createElement("label");
  lab.textContent = label;
  const input = document.createElement("input");
  input.type = "range";
  input.min = String(r.min);
  input.max = String(r.max);
  input.step = String(r.step);
  input.value = String(clampToRange(key, value));
  const out = document.createElement("output");
  out.value = input.value;
  input.addEventListener("input", () => (out.value = input.value));
  const error = document.createElement("span");
  error.className = "inline-error";
  row.append(lab, input, out, error);
  return { row, input, error };
}

export class ControlPanel {
  readonly element = document.createElement("div");
  private queue: MutationQueue;
  private errors = new Map<string, HTMLSpanElement>();

  constructor(
    private client: ServiceClient,
    private state: EditorState,
    groups: string[],
    settings: Record<string, unknown>,
    envYaw: number,
  ) {
    this.queue = new MutationQueue(120, (key, err) => this.showError(key, err));
    this.element.className = "controls";

    // group selector for material edits
    const groupSel = document.createElement("select");
    for (const g of groups) {
      const opt = document.createElement("option");
      opt.value = g;
      opt.textContent = g || "(unnamed)";
      groupSel.append(opt);
    }
    groupSel.addEventListener("change", () => this.state.selectGroup(groupSel.value));
    this.state.selectGroup(groups[0] ?? null);
    const groupRow = document.createElement("div");
    groupRow.className = "control-row";
    const groupLab = document.createElement("label");
    groupLab.textContent = "group";
    groupRow.append(groupLab, groupSel);
    this.element.append(groupRow);

    this.addMaterialSlider("roughness", 0.5);
    this.addMaterialSlider("metallic", 0.0);

    this.addSettingSlider("exposure", Number(settings.exposure ?? 1));
    this.addSettingSlider("n_samples", Number(settings.n_samples ?? 8));
    this.addSettingSlider("step_size", Number(settings.step_size ?? 0.05));

    // SSR toggle
    const ssrRow = document.createElement("div");
    ssrRow.className = "control-row";
    const ssrLab = document.createElement("label");
    ssrLab.textContent = "reflections";
    const ssr = document.createElement("input");
    ssr.type = "checkbox";
    ssr.checked = Boolean(settings.ssr_enabled ?? true);
    const ssrErr = document.createElement("span");
    ssrErr.className = "inline-error";
    this.errors.set("ssr", ssrErr);
    ssr.addEventListener("change", () => {
      this.queue.push("ssr", () => this.client.patchSettings({ ssr_enabled: ssr.checked }));
    });
    ssrRow.append(ssrLab, ssr, ssrErr);
    this.element.append(ssrRow);

    // environment: presets plus yaw
    const envRow = document.createElement("div");
    envRow.className = "control-row";
    const envLab = document.createElement("label");
    envLab.textContent = "environment";
    const envSel = document.createElement("select");
    for (const [name, rgb] of Object.entries(ENV_PRESETS)) {
      const opt = document.createElement("option");
      opt.value = name;
      opt.textContent = name;
      opt.dataset.rgb = JSON.stringify(rgb);
      envSel.append(opt);
    }
    const envErr = document.createElement("span");
    envErr.className = "inline-error";
    this.errors.set("env", envErr);
    const { row: yawRow, input: yawInput } = sliderRow("env yaw", "yaw", envYaw);
    const sendEnv = () => {
      const rgb = JSON.parse(envSel.selectedOptions[0].dataset.rgb ?? "[0.5,0.5,0.5]");
      const yaw = Number(yawInput.value);
      this.queue.push("env", () => this.client.putEnvironment({ constant: rgb, yaw }));
    };
    envSel.addEventListener("change", sendEnv);
    yawInput.addEventListener("input", sendEnv);
    envRow.append(envLab, envSel, envErr);
    this.element.append(envRow, yawRow);
  }

  private addMaterialSlider(key: "roughness" | "metallic", initial: number) {
    const { row, input, error } = sliderRow(key, key, initial);
    this.errors.set(key, error);
    input.addEventListener("input", () => {
      const group = this.state.snapshot().selectedGroup;
      if (group === null) return;
      const value = clampToRange(key, Number(input.value)); // optimistic UI keeps the slider position
      this.queue.push(key, () => this.client.patchMaterial(group, { [key]: value }));
    });
    this.element.append(row);
  }

  private addSettingSlider(key: "exposure" | "n_samples" | "step_size", initial: number) {
    const { row, input, error } = sliderRow(key.replace("_", " "), key, initial);
    this.errors.set(key, error);
    input.addEventListener("input", () => {
      const value = clampToRange(key, Number(input.value));
      this.queue.push(key, () => this.client.patchSettings({ [key]: value }));
    });
    this.element.append(row);
  }

  private showError(key: string, err: unknown) {
    const span = this.errors.get(key);
    const message = err instanceof ApiError ? `${err.status}: ${err.message}` : String(err);
    if (span) {
      span.textContent = message;
      setTimeout(() => (span.textContent = ""), 4000);
    }
    this.state.reportError(message);
  }
}

export const ENV_PRESETS: Record<string, [number, number, number]> = {
  "studio grey": [0.5, 0.5, 0.5],
  "bright white": [1.0, 1.0, 1.0],
  "warm sunset": [0.9, 0.55, 0.3],
  "cool night": [0.15, 0.2, 0.35],
};
