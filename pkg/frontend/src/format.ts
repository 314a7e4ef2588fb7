/**
 * Number formatting that matches the server's canonical JSON exactly.
 *
 * The service rounds every float to six significant digits with C-style %g
 * semantics before serializing; the workbench must render the same digits so
 * a displayed value can be compared to the payload character by character.
 */

function stripTrailingZeros(s: string): string {
  if (!s.includes(".")) return s;
  return s.replace(/0+$/, "").replace(/\.$/, "");
}

/** Render like Python's '%.6g': six significant digits, scientific notation
 * when the decimal exponent is below -4 or at least 6, trailing zeros
 * stripped, exponents zero-padded to two digits. */
export function toSig6(x: number): string {
  if (Number.isNaN(x)) return "NaN";
  if (!Number.isFinite(x)) return x > 0 ? "Infinity" : "-Infinity";
  if (x === 0) return Object.is(x, -0) ? "-0" : "0";
  const sci = x.toExponential(5);
  const exp = Number(sci.split("e")[1]);
  if (exp < -4 || exp >= 6) {
    const [mantissa, rawExp] = sci.split("e") as [string, string];
    const sign = rawExp.startsWith("-") ? "-" : "+";
    const digits = rawExp.replace(/^[-+]/, "").padStart(2, "0");
    return `${stripTrailingZeros(mantissa)}e${sign}${digits}`;
  }
  return stripTrailingZeros(x.toFixed(Math.max(0, 5 - exp)));
}

/** Probability rendering for chart labels: sig-6 but capped for readability. */
export function formatProbability(p: number): string {
  if (p !== 0 && Math.abs(p) < 1e-4) return toSig6(p);
  return stripTrailingZeros(p.toFixed(4));
}
