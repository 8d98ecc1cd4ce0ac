// Canonical JSON text in the exact dialect the operator service emits:
// keys sorted, ", " and ": " separators, non-ASCII escaped as \uXXXX.
// The console displays Decision objects as these bytes so what the user
// sees is literally what the service sent.

function escapeString(s: string): string {
  const base = JSON.stringify(s);
  return base.replace(/[-￿]/g, (ch) => {
    return "\\u" + ch.charCodeAt(0).toString(16).padStart(4, "0");
  });
}

export function canonicalJson(value: unknown): string {
  if (value === null || value === undefined) return "null";
  if (typeof value === "boolean") return value ? "true" : "false";
  if (typeof value === "number") {
    if (!Number.isFinite(value)) throw new Error("non-finite number");
    return String(value);
  }
  if (typeof value === "string") return escapeString(value);
  if (Array.isArray(value)) {
    return "[" + value.map(canonicalJson).join(", ") + "]";
  }
  if (typeof value === "object") {
    const obj = value as Record<string, unknown>;
    const parts = Object.keys(obj)
      .sort()
      .map((k) => escapeString(k) + ": " + canonicalJson(obj[k]));
    return "{" + parts.join(", ") + "}";
  }
  throw new Error(`cannot serialize ${typeof value}`);
}
