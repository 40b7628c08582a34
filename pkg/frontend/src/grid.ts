/** Grid model behind the objective surface: axes, cells, and color scale.
 *
 * A cell is one (eps_spec, fairness_spec) coordinate of one framework. Cells
 * with no record stay empty and are rendered as explicit gaps; nothing is
 * ever interpolated. A framework whose records fill fewer than four cells
 * has no surface worth coloring and falls back to a plain table.
 */

import { FrontierRecord, Objective } from "./types";

export interface GridModel {
  framework: string;
  objective: Objective;
  epsValues: number[];
  gammaValues: number[];
  cells: Map<string, FrontierRecord[]>;
  filledCells: number;
  lo: number;
  hi: number;
}

function gridKey(eps: number, gamma: number): string {
  return `${eps}|${gamma}`;
}

export function buildGrid(
  records: readonly FrontierRecord[],
  framework: string,
  objective: Objective,
): GridModel {
  const mine = records.filter((r) => r.framework === framework);
  const epsValues = [...new Set(mine.map((r) => r.eps_spec))].sort((a, b) => a - b);
  const gammaValues = [...new Set(mine.map((r) => r.fairness_spec))].sort(
    (a, b) => a - b,
  );
  const cells = new Map<string, FrontierRecord[]>();
  for (const r of mine) {
    const key = gridKey(r.eps_spec, r.fairness_spec);
    const bucket = cells.get(key);
    if (bucket) {
      bucket.push(r);
    } else {
      cells.set(key, [r]);
    }
  }
  let lo = Infinity;
  let hi = -Infinity;
  for (const bucket of cells.values()) {
    const v = meanObjective(bucket, objective);
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  return {
    framework,
    objective,
    epsValues,
    gammaValues,
    cells,
    filledCells: cells.size,
    lo,
    hi,
  };
}

function meanObjective(bucket: readonly FrontierRecord[], objective: Objective): number {
  let total = 0;
  for (const r of bucket) total += r[objective];
  return total / bucket.length;
}

export function cellRecords(
  grid: GridModel,
  eps: number,
  gamma: number,
): FrontierRecord[] {
  return grid.cells.get(gridKey(eps, gamma)) ?? [];
}

/** Mean objective over the cell's replicates, or null for an empty cell. */
export function cellValue(grid: GridModel, eps: number, gamma: number): number | null {
  const bucket = grid.cells.get(gridKey(eps, gamma));
  if (!bucket) return null;
  return meanObjective(bucket, grid.objective);
}

export function useTableFallback(grid: GridModel): boolean {
  return grid.filledCells < 4;
}

export interface CellColor {
  background: string;
  foreground: string;
}

/** Single-hue ramp from pale to saturated; flat ranges map to the midpoint. */
export function colorFor(grid: GridModel, value: number): CellColor {
  const span = grid.hi - grid.lo;
  const t = span > 0 ? (value - grid.lo) / span : 0.5;
  const lightness = 93 - t * 58;
  return {
    background: `hsl(210 65% ${lightness.toFixed(1)}%)`,
    foreground: t > 0.55 ? "#ffffff" : "#1a2433",
  };
}
