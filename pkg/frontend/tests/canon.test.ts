import { describe, expect, it } from "vitest";

import { canonicalJson } from "../src/canon.js";

// Expected strings are frozen from the serializer the service actually
// uses, so these are byte-level contracts rather than self-tests.
describe("canonicalJson", () => {
  it("sorts keys and uses ', ' / ': ' separators", () => {
    expect(canonicalJson({ b: 1, a: null })).toBe('{"a": null, "b": 1}');
  });

  it("matches a realistic decision object", () => {
    const decision = {
      human_text: "i do not know how to do polish_silver",
      kind: "Rejected",
      reason: "UnknownTask",
      request_id: 7,
      tick: 3,
    };
    expect(canonicalJson(decision)).toBe(
      '{"human_text": "i do not know how to do polish_silver", "kind": "Rejected", "reason": "UnknownTask", "request_id": 7, "tick": 3}',
    );
  });

  it("recurses through arrays and nested objects", () => {
    const doc = { nested: { z: [1, 2, { y: false, x: true }], a: "" }, n: 0 };
    expect(canonicalJson(doc)).toBe(
      '{"n": 0, "nested": {"a": "", "z": [1, 2, {"x": true, "y": false}]}}',
    );
  });

  it("escapes non-ascii the way the service does", () => {
    expect(canonicalJson({ s: 'café ✓ "q" \\ \n\ttab' })).toBe(
      '{"s": "caf\\u00e9 \\u2713 \\"q\\" \\\\ \\n\\ttab"}',
    );
  });

  it("handles empty containers and negative numbers", () => {
    expect(canonicalJson([])).toBe("[]");
    expect(canonicalJson({})).toBe("{}");
    expect(canonicalJson({ neg: -12, big: 123456789 })).toBe('{"big": 123456789, "neg": -12}');
  });

  it("treats null and undefined alike", () => {
    expect(canonicalJson(null)).toBe("null");
    expect(canonicalJson(undefined)).toBe("null");
  });

  it("round-trips through JSON.parse unchanged", () => {
    const doc = { k: [1, "two", null, { deep: true }] };
    const text = canonicalJson(doc);
    expect(canonicalJson(JSON.parse(text))).toBe(text);
  });

  it("refuses non-finite numbers", () => {
    expect(() => canonicalJson({ x: Infinity })).toThrow();
    expect(() => canonicalJson(NaN)).toThrow();
  });
});
