/** Page wiring: load records, hold the control state, and re-render.
 *
 * All computation is synchronous and happens on the main thread; desk-scale
 * record counts make every recompute a full redraw of every panel.
 */

import { buildGrid, useTableFallback } from "./grid";
import { LoadError, parseDocument } from "./loader";
import { feasibleRecords, frontier, frontierQuery } from "./pareto";
import {
  clearError,
  renderCellDetail,
  renderError,
  renderFrameworkTable,
  renderHeatmap,
  renderMeta,
  renderPinned,
  renderRecordsTable,
  renderScenarios,
} from "./render";
import { Scenario, deltas } from "./scenario";
import { FrontierDocument, FrontierRecord, Objective } from "./types";
import { readParams, writeParams } from "./urlstate";

const DEFAULT_SRC = "data/frontier.json";

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

function niceCeil(x: number): number {
  if (!(x > 0)) return 1;
  const unit = Math.pow(10, Math.floor(Math.log10(x)) - 1);
  return Math.ceil(x / unit) * unit;
}

const ui = {
  errorPanel: byId<HTMLDivElement>("error-panel"),
  app: byId<HTMLElement>("app"),
  metaLine: byId<HTMLSpanElement>("meta-line"),
  fileInput: byId<HTMLInputElement>("file-input"),
  frameworkSelect: byId<HTMLSelectElement>("framework-select"),
  objectiveSelect: byId<HTMLSelectElement>("objective-select"),
  epsSlider: byId<HTMLInputElement>("eps-slider"),
  epsInput: byId<HTMLInputElement>("eps-input"),
  gammaSlider: byId<HTMLInputElement>("gamma-slider"),
  gammaInput: byId<HTMLInputElement>("gamma-input"),
  frontierOnly: byId<HTMLInputElement>("frontier-only"),
  saveA: byId<HTMLButtonElement>("save-a"),
  saveB: byId<HTMLButtonElement>("save-b"),
  clearScenarios: byId<HTMLButtonElement>("clear-scenarios"),
  heatmap: byId<HTMLDivElement>("heatmap"),
  cellDetail: byId<HTMLPreElement>("cell-detail"),
  pinned: byId<HTMLDivElement>("pinned-panel"),
  scenarios: byId<HTMLDivElement>("scenario-panel"),
  recordsTable: byId<HTMLDivElement>("records-panel"),
};

interface AppState {
  doc: FrontierDocument | null;
  src: string;
  framework: string;
  objective: Objective;
  maxEps: number;
  maxGamma: number;
  frontierOnly: boolean;
  scenarioA: Scenario | null;
  scenarioB: Scenario | null;
}

const state: AppState = {
  doc: null,
  src: DEFAULT_SRC,
  framework: "",
  objective: "coverage",
  maxEps: 0,
  maxGamma: 0,
  frontierOnly: false,
  scenarioA: null,
  scenarioB: null,
};

function setConstraintControls(maxEps: number, maxGamma: number): void {
  state.maxEps = maxEps;
  state.maxGamma = maxGamma;
  ui.epsSlider.value = String(maxEps);
  ui.epsInput.value = String(maxEps);
  ui.gammaSlider.value = String(maxGamma);
  ui.gammaInput.value = String(maxGamma);
}

function applyDocument(
  doc: FrontierDocument,
  initial: { eps: number | null; gamma: number | null },
): void {
  state.doc = doc;
  state.scenarioA = null;
  state.scenarioB = null;

  ui.frameworkSelect.textContent = "";
  for (const name of doc.frameworks) {
    const option = document.createElement("option");
    option.value = name;
    option.textContent = name;
    ui.frameworkSelect.appendChild(option);
  }
  const first = doc.frameworks[0];
  state.framework = doc.frameworks.includes(state.framework)
    ? state.framework
    : first ?? "";
  ui.frameworkSelect.value = state.framework;

  const epsHi = niceCeil(1.15 * Math.max(...doc.records.map((r) => r.eps_achieved)));
  const gammaHi = niceCeil(
    1.15 * Math.max(...doc.records.map((r) => r.max_disparity)),
  );
  ui.epsSlider.min = "0";
  ui.epsSlider.max = String(epsHi);
  ui.gammaSlider.min = "0";
  ui.gammaSlider.max = String(gammaHi);
  setConstraintControls(initial.eps ?? epsHi, initial.gamma ?? gammaHi);

  renderMeta(ui.metaLine, doc);
  ui.app.hidden = false;
  recompute();
}

function currentScenario(pinned: FrontierRecord | null): Scenario {
  return {
    maxEps: state.maxEps,
    maxGamma: state.maxGamma,
    objective: state.objective,
    pinned,
  };
}

function syncUrl(): void {
  const search = writeParams({
    src: state.src === DEFAULT_SRC ? null : state.src,
    eps: state.maxEps,
    gamma: state.maxGamma,
  });
  history.replaceState(null, "", `${location.pathname}${search}`);
}

function recompute(): void {
  const doc = state.doc;
  if (doc === null) return;
  const constraints = { maxEps: state.maxEps, maxGamma: state.maxGamma };

  const grid = buildGrid(doc.records, state.framework, state.objective);
  if (useTableFallback(grid)) {
    renderFrameworkTable(
      ui.heatmap,
      state.framework,
      doc.records.filter((r) => r.framework === state.framework),
    );
  } else {
    renderHeatmap(ui.heatmap, grid, constraints, (records) =>
      renderCellDetail(ui.cellDetail, records),
    );
  }

  const pinned = frontierQuery(
    doc.records,
    state.maxEps,
    state.maxGamma,
    state.objective,
  );
  const feasible = feasibleRecords(doc.records, state.maxEps, state.maxGamma);
  renderPinned(ui.pinned, pinned, feasible.length, doc.records.length);

  const listed = state.frontierOnly ? frontier(doc.records) : doc.records;
  renderRecordsTable(ui.recordsTable, listed, constraints, pinned);

  const both = state.scenarioA !== null && state.scenarioB !== null;
  renderScenarios(
    ui.scenarios,
    state.scenarioA,
    state.scenarioB,
    both ? deltas(state.scenarioA as Scenario, state.scenarioB as Scenario) : null,
  );
  syncUrl();
}

function loadText(text: string, sourceLabel: string): void {
  try {
    const doc = parseDocument(text);
    clearError(ui.errorPanel);
    state.src = sourceLabel;
    applyDocument(doc, { eps: null, gamma: null });
  } catch (err) {
    if (err instanceof LoadError) {
      renderError(ui.errorPanel, `cannot load ${sourceLabel}: ${err.message}`);
      return;
    }
    throw err;
  }
}

async function boot(): Promise<void> {
  const params = readParams(location.search);
  const src = params.src ?? DEFAULT_SRC;
  state.src = src;
  let text: string;
  try {
    const response = await fetch(src);
    if (!response.ok) {
      throw new LoadError(`${src}: HTTP ${response.status}`);
    }
    text = await response.text();
  } catch (err) {
    renderError(
      ui.errorPanel,
      `cannot fetch ${src}: ${(err as Error).message}; ` +
        "use the file picker to load records",
    );
    return;
  }
  try {
    const doc = parseDocument(text);
    clearError(ui.errorPanel);
    applyDocument(doc, { eps: params.eps, gamma: params.gamma });
  } catch (err) {
    if (err instanceof LoadError) {
      renderError(ui.errorPanel, `cannot load ${src}: ${err.message}`);
      return;
    }
    throw err;
  }
}

ui.fileInput.addEventListener("change", () => {
  const file = ui.fileInput.files?.[0];
  if (!file) return;
  void file.text().then((text) => loadText(text, file.name));
});

ui.frameworkSelect.addEventListener("change", () => {
  state.framework = ui.frameworkSelect.value;
  renderCellDetail(ui.cellDetail, []);
  recompute();
});

ui.objectiveSelect.addEventListener("change", () => {
  state.objective = ui.objectiveSelect.value as Objective;
  recompute();
});

function onConstraintEdit(
  slider: HTMLInputElement,
  input: HTMLInputElement,
  apply: (value: number) => void,
): void {
  slider.addEventListener("input", () => {
    const value = Number(slider.value);
    input.value = slider.value;
    apply(value);
    recompute();
  });
  input.addEventListener("change", () => {
    const value = Number(input.value);
    if (!Number.isFinite(value) || value < 0) return;
    slider.value = input.value;
    apply(value);
    recompute();
  });
}

onConstraintEdit(ui.epsSlider, ui.epsInput, (v) => {
  state.maxEps = v;
});
onConstraintEdit(ui.gammaSlider, ui.gammaInput, (v) => {
  state.maxGamma = v;
});

ui.frontierOnly.addEventListener("change", () => {
  state.frontierOnly = ui.frontierOnly.checked;
  recompute();
});

ui.saveA.addEventListener("click", () => {
  if (state.doc === null) return;
  state.scenarioA = currentScenario(
    frontierQuery(state.doc.records, state.maxEps, state.maxGamma, state.objective),
  );
  recompute();
});

ui.saveB.addEventListener("click", () => {
  if (state.doc === null) return;
  state.scenarioB = currentScenario(
    frontierQuery(state.doc.records, state.maxEps, state.maxGamma, state.objective),
  );
  recompute();
});

ui.clearScenarios.addEventListener("click", () => {
  state.scenarioA = null;
  state.scenarioB = null;
  recompute();
});

void boot();
