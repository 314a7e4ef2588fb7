import { describe, expect, it } from "vitest";

import { toSig6 } from "../src/format";
import fixture from "./sig6_fixture.json";

describe("toSig6", () => {
  it("matches the server's %.6g rendering on the generated fixture", () => {
    const mismatches: string[] = [];
    for (const { value, text } of fixture as Array<{ value: number; text: string }>) {
      const got = toSig6(value);
      if (got !== text) {
        mismatches.push(`${value}: got ${got}, want ${text}`);
      }
    }
    expect(mismatches, mismatches.slice(0, 10).join("; ")).toHaveLength(0);
  });

  it("is idempotent on already-rounded payload values", () => {
    for (const { value } of fixture as Array<{ value: number; text: string }>) {
      const once = toSig6(value);
      expect(toSig6(Number(once))).toBe(once);
    }
  });

  it("uses scientific notation outside the %g fixed range", () => {
    expect(toSig6(4.02392e-5)).toBe("4.02392e-05");
    expect(toSig6(1234567)).toBe("1.23457e+06");
    expect(toSig6(0.0001)).toBe("0.0001");
  });
});
