/** DOM builders. Every element is constructed and filled via textContent,
 * so record contents can never be interpreted as markup.
 */

import { GridModel, cellRecords, cellValue, colorFor } from "./grid";
import { Scenario, ScenarioDeltas } from "./scenario";
import { FrontierDocument, FrontierRecord, RECORD_FIELDS } from "./types";

export interface Constraints {
  maxEps: number;
  maxGamma: number;
}

function isFeasible(r: FrontierRecord, c: Constraints): boolean {
  return r.eps_achieved <= c.maxEps && r.max_disparity <= c.maxGamma;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function recordLines(records: readonly FrontierRecord[]): string {
  return records
    .map((r) =>
      RECORD_FIELDS.map((f) => `${f}=${String(r[f])}`).join("  "),
    )
    .join("\n");
}

export function renderError(panel: HTMLElement, message: string): void {
  panel.textContent = message;
  panel.hidden = false;
}

export function clearError(panel: HTMLElement): void {
  panel.textContent = "";
  panel.hidden = true;
}

export function renderMeta(target: HTMLElement, doc: FrontierDocument): void {
  const { meta, records } = doc;
  const parts = [
    meta.dataset ?? "unnamed dataset",
    `${records.length} records`,
    `${doc.frameworks.length} frameworks`,
  ];
  if (meta.master_seed !== undefined) parts.push(`seed ${meta.master_seed}`);
  if (meta.generated_at) parts.push(`generated ${meta.generated_at}`);
  target.textContent = parts.join(", ");
}

/** Colored objective surface; empty cells stay visibly empty. */
export function renderHeatmap(
  container: HTMLElement,
  grid: GridModel,
  constraints: Constraints,
  onCellClick: (records: FrontierRecord[]) => void,
): void {
  container.textContent = "";
  const table = el("table", "heatmap");
  const head = el("tr");
  head.appendChild(el("th", "axis-corner", "fairness \\ eps"));
  for (const eps of grid.epsValues) {
    head.appendChild(el("th", undefined, String(eps)));
  }
  table.appendChild(head);

  for (const gamma of grid.gammaValues) {
    const row = el("tr");
    row.appendChild(el("th", undefined, String(gamma)));
    for (const eps of grid.epsValues) {
      const value = cellValue(grid, eps, gamma);
      if (value === null) {
        row.appendChild(el("td", "nodata", "no data"));
        continue;
      }
      const records = cellRecords(grid, eps, gamma);
      const cell = el("td", "cell", value.toFixed(3));
      const color = colorFor(grid, value);
      cell.style.background = color.background;
      cell.style.color = color.foreground;
      cell.title = recordLines(records);
      if (records.some((r) => isFeasible(r, constraints))) {
        cell.classList.add("feasible");
      }
      cell.addEventListener("click", () => onCellClick(records));
      row.appendChild(cell);
    }
    table.appendChild(row);
  }
  container.appendChild(table);

  const legend = el(
    "p",
    "legend",
    `${grid.objective} over (eps_spec, fairness_spec); outlined cells hold a ` +
      "feasible record; click a cell for its records",
  );
  container.appendChild(legend);
}

/** Fallback for frameworks with fewer than four grid points. */
export function renderFrameworkTable(
  container: HTMLElement,
  framework: string,
  records: readonly FrontierRecord[],
): void {
  container.textContent = "";
  container.appendChild(
    el("p", "legend", `${framework}: too few grid points for a surface`),
  );
  container.appendChild(buildRecordsTable(records, () => []));
}

export function renderCellDetail(
  target: HTMLElement,
  records: readonly FrontierRecord[],
): void {
  target.textContent = records.length === 0 ? "" : recordLines(records);
}

export function renderPinned(
  container: HTMLElement,
  pinned: FrontierRecord | null,
  feasibleCount: number,
  totalCount: number,
): void {
  container.textContent = "";
  container.appendChild(
    el("p", "legend", `${feasibleCount} of ${totalCount} records feasible`),
  );
  if (pinned === null) {
    container.appendChild(
      el("p", "nofeasible", "no feasible point under these ceilings"),
    );
    return;
  }
  const dl = el("dl", "record");
  for (const field of RECORD_FIELDS) {
    dl.appendChild(el("dt", undefined, field));
    dl.appendChild(el("dd", undefined, String(pinned[field])));
  }
  container.appendChild(dl);
}

function buildRecordsTable(
  records: readonly FrontierRecord[],
  rowClasses: (r: FrontierRecord) => string[],
): HTMLTableElement {
  const table = el("table", "records");
  const head = el("tr");
  for (const field of RECORD_FIELDS) head.appendChild(el("th", undefined, field));
  table.appendChild(head);
  for (const r of records) {
    const row = el("tr");
    for (const cls of rowClasses(r)) row.classList.add(cls);
    for (const field of RECORD_FIELDS) {
      row.appendChild(el("td", undefined, String(r[field])));
    }
    table.appendChild(row);
  }
  return table;
}

export function renderRecordsTable(
  container: HTMLElement,
  records: readonly FrontierRecord[],
  constraints: Constraints,
  pinned: FrontierRecord | null,
): void {
  container.textContent = "";
  container.appendChild(
    buildRecordsTable(records, (r) => {
      const classes: string[] = [];
      if (isFeasible(r, constraints)) classes.push("feasible");
      if (r === pinned) classes.push("pinned");
      return classes;
    }),
  );
}

function deltaText(value: number | null): string {
  if (value === null) return "n/a";
  return value > 0 ? `+${String(value)}` : String(value);
}

function scenarioBlock(label: string, s: Scenario | null): HTMLElement {
  const box = el("div", "scenario");
  box.appendChild(el("h3", undefined, label));
  if (s === null) {
    box.appendChild(el("p", "legend", "not saved"));
    return box;
  }
  box.appendChild(
    el(
      "p",
      undefined,
      `max_eps ${String(s.maxEps)}, max_gamma ${String(s.maxGamma)}, ` +
        `objective ${s.objective}`,
    ),
  );
  if (s.pinned === null) {
    box.appendChild(el("p", "nofeasible", "no feasible point"));
  } else {
    const dl = el("dl", "record");
    for (const field of RECORD_FIELDS) {
      dl.appendChild(el("dt", undefined, field));
      dl.appendChild(el("dd", undefined, String(s.pinned[field])));
    }
    box.appendChild(dl);
  }
  return box;
}

export function renderScenarios(
  container: HTMLElement,
  a: Scenario | null,
  b: Scenario | null,
  diff: ScenarioDeltas | null,
): void {
  container.textContent = "";
  const row = el("div", "scenario-row");
  row.appendChild(scenarioBlock("A", a));
  row.appendChild(scenarioBlock("B", b));
  if (diff !== null) {
    const box = el("div", "scenario");
    box.appendChild(el("h3", undefined, "B minus A"));
    const dl = el("dl", "record");
    for (const [label, value] of [
      ["coverage", diff.coverage],
      ["accuracy", diff.accuracy],
      ["max_disparity", diff.disparity],
    ] as const) {
      dl.appendChild(el("dt", undefined, label));
      dl.appendChild(el("dd", undefined, deltaText(value)));
    }
    box.appendChild(dl);
    row.appendChild(box);
  }
  container.appendChild(row);
}
