/** URL query parameters: ?src= picks the records file, ?eps= and ?gamma=
 * preload the two constraint ceilings, making operating points shareable.
 */

export interface UrlState {
  src: string | null;
  eps: number | null;
  gamma: number | null;
}

function numberOrNull(raw: string | null): number | null {
  if (raw === null || raw.trim() === "") return null;
  const value = Number(raw);
  return Number.isFinite(value) ? value : null;
}

export function readParams(search: string): UrlState {
  const params = new URLSearchParams(search);
  return {
    src: params.get("src"),
    eps: numberOrNull(params.get("eps")),
    gamma: numberOrNull(params.get("gamma")),
  };
}

/** Serialize state back to a search string ("" when nothing is set). */
export function writeParams(state: UrlState): string {
  const params = new URLSearchParams();
  if (state.src !== null) params.set("src", state.src);
  if (state.eps !== null) params.set("eps", String(state.eps));
  if (state.gamma !== null) params.set("gamma", String(state.gamma));
  const text = params.toString();
  return text === "" ? "" : `?${text}`;
}
