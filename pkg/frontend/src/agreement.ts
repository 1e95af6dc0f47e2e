/** Display formatting for agreement numbers.
 *
 * The UI never computes agreement locally; these helpers only round what
 * the API returned, to two decimals.
 */

import type { Agreement } from "./types.js";

export function displayKappa(value: number | null): string {
  if (value === null) return "–";
  return value.toFixed(2);
}

export function displayPct(value: number | null): string {
  if (value === null) return "–";
  return `${(value * 100).toFixed(0)}%`;
}

export function agreementLine(a: Agreement): string {
  if (a.n === 0) return "no commonly labeled columns yet";
  if (a.degenerate) return `agreement ${displayPct(a.agreement_pct)} · κ undefined (degenerate)`;
  return `agreement ${displayPct(a.agreement_pct)} · κ = ${displayKappa(a.kappa)} over ${a.n}`;
}
