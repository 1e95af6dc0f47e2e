import assert from "node:assert/strict";
import { test } from "node:test";

import { agreementLine, displayKappa, displayPct } from "../src/agreement.js";

test("kappa displayed to exactly two decimals, never recomputed", () => {
  assert.equal(displayKappa(1), "1.00");
  assert.equal(displayKappa(0), "0.00");
  assert.equal(displayKappa(0.830508), "0.83");
  assert.equal(displayKappa(-0.125), "-0.13");
  assert.equal(displayKappa(null), "–");
});

test("percentage display", () => {
  assert.equal(displayPct(0.5), "50%");
  assert.equal(displayPct(1), "100%");
  assert.equal(displayPct(null), "–");
});

test("agreement line shapes", () => {
  assert.equal(
    agreementLine({ n: 4, agreement_pct: 0.5, kappa: 0, degenerate: false }),
    "agreement 50% · κ = 0.00 over 4",
  );
  assert.equal(
    agreementLine({ n: 0, agreement_pct: null, kappa: null, degenerate: false }),
    "no commonly labeled columns yet",
  );
  assert.match(
    agreementLine({ n: 3, agreement_pct: 1, kappa: null, degenerate: true }),
    /undefined \(degenerate\)/,
  );
});
