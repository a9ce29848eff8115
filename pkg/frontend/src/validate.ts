/**
 * Minimal JSON-Schema (draft-07 subset) checker.
 *
 * The annotator ships no schema of its own: it loads the pipeline's
 * `groundtruth.schema.json` and interprets it directly, so the export
 * contract cannot drift between the two sides. Only the keywords that
 * schema uses are implemented: type, required, properties,
 * additionalProperties:false, enum, items, $ref (#/definitions/...),
 * oneOf, minimum, minLength.
 */

export type Schema = Record<string, unknown>;

function typeOk(expected: string, value: unknown): boolean {
  switch (expected) {
    case "object":
      return typeof value === "object" && value !== null && !Array.isArray(value);
    case "array":
      return Array.isArray(value);
    case "string":
      return typeof value === "string";
    case "integer":
      return typeof value === "number" && Number.isInteger(value);
    case "number":
      return typeof value === "number" && Number.isFinite(value);
    case "boolean":
      return typeof value === "boolean";
    case "null":
      return value === null;
    default:
      return false;
  }
}

function resolveRef(ref: string, root: Schema): Schema {
  if (!ref.startsWith("#/")) {
    throw new Error(`unsupported $ref '${ref}': only local refs are handled`);
  }
  let node: unknown = root;
  for (const part of ref.slice(2).split("/")) {
    if (typeof node !== "object" || node === null || !(part in (node as Schema))) {
      throw new Error(`unresolvable $ref '${ref}'`);
    }
    node = (node as Schema)[part];
  }
  return node as Schema;
}

function check(schema: Schema, value: unknown, root: Schema, path: string, errors: string[]): void {
  const ref = schema.$ref;
  if (typeof ref === "string") {
    check(resolveRef(ref, root), value, root, path, errors);
    return;
  }

  const oneOf = schema.oneOf;
  if (Array.isArray(oneOf)) {
    const branchErrors: string[][] = [];
    let matches = 0;
    for (const branch of oneOf) {
      const sub: string[] = [];
      check(branch as Schema, value, root, path, sub);
      if (sub.length === 0) {
        matches += 1;
      }
      branchErrors.push(sub);
    }
    if (matches === 0) {
      const detail = branchErrors.map((e) => e[0] ?? "?").join(" | ");
      errors.push(`${path}: matched no oneOf branch (${detail})`);
    } else if (matches > 1) {
      errors.push(`${path}: matched ${matches} oneOf branches, expected exactly one`);
    }
    return;
  }

  const expected = schema.type;
  if (typeof expected === "string") {
    if (!typeOk(expected, value)) {
      errors.push(`${path}: expected ${expected}, got ${describe(value)}`);
      return;
    }
  } else if (Array.isArray(expected)) {
    if (!expected.some((t) => typeOk(String(t), value))) {
      errors.push(`${path}: expected one of [${expected.join(", ")}], got ${describe(value)}`);
      return;
    }
  }

  const allowed = schema.enum;
  if (Array.isArray(allowed) && !allowed.some((v) => v === value)) {
    errors.push(`${path}: value ${JSON.stringify(value)} not in enum [${allowed.join(", ")}]`);
    return;
  }

  if (typeof value === "number") {
    const minimum = schema.minimum;
    if (typeof minimum === "number" && value < minimum) {
      errors.push(`${path}: ${value} is below minimum ${minimum}`);
    }
  }

  if (typeof value === "string") {
    const minLength = schema.minLength;
    if (typeof minLength === "number" && value.length < minLength) {
      errors.push(`${path}: string shorter than minLength ${minLength}`);
    }
  }

  if (Array.isArray(value)) {
    const items = schema.items;
    if (typeof items === "object" && items !== null && !Array.isArray(items)) {
      value.forEach((item, i) => check(items as Schema, item, root, `${path}[${i}]`, errors));
    }
    return;
  }

  if (typeof value === "object" && value !== null) {
    const obj = value as Record<string, unknown>;
    const required = schema.required;
    if (Array.isArray(required)) {
      for (const key of required) {
        if (!(String(key) in obj)) {
          errors.push(`${path}: missing required property '${key}'`);
        }
      }
    }
    const properties = (schema.properties ?? {}) as Record<string, Schema>;
    for (const [key, sub] of Object.entries(properties)) {
      if (key in obj) {
        check(sub, obj[key], root, `${path}.${key}`, errors);
      }
    }
    if (schema.additionalProperties === false) {
      for (const key of Object.keys(obj)) {
        if (!(key in properties)) {
          errors.push(`${path}: unexpected property '${key}'`);
        }
      }
    }
  }
}

function describe(value: unknown): string {
  if (value === null) {
    return "null";
  }
  if (Array.isArray(value)) {
    return "array";
  }
  return typeof value;
}

/** All violations of `schema` by `value`, as '<path>: message' strings. */
export function validateValue(schema: Schema, value: unknown): string[] {
  const errors: string[] = [];
  check(schema, value, schema, "$", errors);
  return errors;
}

/** Throw a diagnostic error when `value` does not satisfy `schema`. */
export function assertValid(schema: Schema, value: unknown, label: string): void {
  const errors = validateValue(schema, value);
  if (errors.length > 0) {
    throw new Error(`${label} does not match the ground-truth schema:\n  ${errors.join("\n  ")}`);
  }
}
