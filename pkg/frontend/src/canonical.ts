/**
 * Canonical JSON with a real int/float distinction, plus sha256 digests.
 *
 * The relay hashes state as the sha256 of its canonical JSON: keys sorted
 * by code point, no whitespace, floats rendered as the shortest decimal
 * that round-trips (always with a `.` or exponent, so `1.0` never
 * collapses to `1`), UTF-8 bytes.  Replicas compare hashes, so this
 * client must produce byte-identical text for equal values.
 *
 * JavaScript has one number type, so float-ness is carried explicitly:
 * a {@link Real} wraps a number that serializes as a float; a bare
 * `number` is an integer.  {@link parseTaggedJson} preserves the
 * distinction when reading wire text (a token containing `.`, `e` or
 * `E` is a float).
 */

/** A JSON number that serializes as a float (with `.0` if integral). */
export class Real {
  constructor(readonly v: number) {}
}

/** Tag a number as float-valued for serialization. */
export function real(v: number): Real {
  return new Real(v);
}

export type JValue =
  | null
  | boolean
  | number
  | Real
  | string
  | JValue[]
  | JObject;

export interface JObject {
  [key: string]: JValue;
}

/** Numeric value of an int or float JSON leaf. */
export function num(v: JValue): number {
  if (v instanceof Real) return v.v;
  if (typeof v === "number") return v;
  throw new CanonicalError(`expected a number, got ${describe(v)}`);
}

export class CanonicalError extends Error {}

function describe(v: JValue): string {
  if (v === null) return "null";
  if (Array.isArray(v)) return "array";
  return typeof v;
}

// ---------------------------------------------------------------------------
// Float formatting (shortest round-trip decimal, fixed/scientific switch)
// ---------------------------------------------------------------------------

/**
 * Shortest round-trip decimal for a finite double.
 *
 * Fixed notation while the decimal point lands within [-3, 16] digits of
 * the mantissa (integral values get a trailing `.0`); scientific
 * otherwise, with a signed exponent of at least two digits.  Examples:
 * `0.0001`, `1e-05`, `9999999999999998.0`, `1e+16`, `-0.0`.
 */
export function formatFloat(x: number): string {
  if (!Number.isFinite(x)) {
    throw new CanonicalError(`not canonically encodable: ${x}`);
  }
  if (x === 0) return Object.is(x, -0) ? "-0.0" : "0.0";
  if (x < 0) return "-" + formatFloat(-x);
  // toExponential() without an argument yields the shortest mantissa that
  // uniquely identifies the double: "d[.ddd]e±E".
  const sci = x.toExponential();
  const m = /^(\d)(?:\.(\d+))?e([+-]\d+)$/.exec(sci);
  if (m === null) throw new CanonicalError(`unexpected exponential form ${sci}`);
  const digits = m[1] + (m[2] ?? "");
  const exp = parseInt(m[3], 10); // value = digits[0].digits[1:] * 10^exp
  const decpt = exp + 1;          // value = 0.digits * 10^decpt
  if (decpt > 16 || decpt <= -4) {
    const mantissa = digits.length > 1 ? digits[0] + "." + digits.slice(1) : digits;
    const sign = exp < 0 ? "-" : "+";
    const absExp = Math.abs(exp).toString().padStart(2, "0");
    return `${mantissa}e${sign}${absExp}`;
  }
  if (decpt <= 0) {
    return "0." + "0".repeat(-decpt) + digits;
  }
  if (decpt >= digits.length) {
    return digits + "0".repeat(decpt - digits.length) + ".0";
  }
  return digits.slice(0, decpt) + "." + digits.slice(decpt);
}

// ---------------------------------------------------------------------------
// Stringify
// ---------------------------------------------------------------------------

/** Compare strings by Unicode code point (not UTF-16 code unit). */
export function compareCodePoints(a: string, b: string): number {
  let i = 0;
  let j = 0;
  while (i < a.length && j < b.length) {
    const ca = a.codePointAt(i)!;
    const cb = b.codePointAt(j)!;
    if (ca !== cb) return ca - cb;
    i += ca > 0xffff ? 2 : 1;
    j += cb > 0xffff ? 2 : 1;
  }
  return a.length - i - (b.length - j);
}

function stringifyInto(v: JValue, out: string[]): void {
  if (v === null) {
    out.push("null");
  } else if (typeof v === "boolean") {
    out.push(v ? "true" : "false");
  } else if (typeof v === "number") {
    if (!Number.isSafeInteger(v)) {
      throw new CanonicalError(
        `bare number ${v} is not a safe integer; wrap floats in real()`);
    }
    out.push(String(v));
  } else if (v instanceof Real) {
    out.push(formatFloat(v.v));
  } else if (typeof v === "string") {
    out.push(JSON.stringify(v));
  } else if (Array.isArray(v)) {
    out.push("[");
    for (let i = 0; i < v.length; i++) {
      if (i > 0) out.push(",");
      stringifyInto(v[i], out);
    }
    out.push("]");
  } else {
    const keys = Object.keys(v).sort(compareCodePoints);
    out.push("{");
    for (let i = 0; i < keys.length; i++) {
      if (i > 0) out.push(",");
      out.push(JSON.stringify(keys[i]), ":");
      stringifyInto(v[keys[i]], out);
    }
    out.push("}");
  }
}

/** Canonical JSON text: sorted keys, no whitespace, shortest floats. */
export function canonicalJson(v: JValue): string {
  const out: string[] = [];
  stringifyInto(v, out);
  return out.join("");
}

const UTF8_ENCODER = new TextEncoder();

export function canonicalBytes(v: JValue): Uint8Array {
  return UTF8_ENCODER.encode(canonicalJson(v));
}

/** sha256 hex digest of a value's canonical JSON form. */
export function digest(v: JValue): string {
  return sha256Hex(canonicalBytes(v));
}

// ---------------------------------------------------------------------------
// Parsing (keeps the int/float distinction of each number token)
// ---------------------------------------------------------------------------

class Parser {
  pos = 0;

  constructor(readonly text: string) {}

  fail(why: string): never {
    throw new CanonicalError(`${why} at position ${this.pos}`);
  }

  skipWs(): void {
    while (this.pos < this.text.length && " \t\n\r".includes(this.text[this.pos])) {
      this.pos++;
    }
  }

  parseValue(): JValue {
    this.skipWs();
    if (this.pos >= this.text.length) this.fail("unexpected end of input");
    const c = this.text[this.pos];
    if (c === "{") return this.parseObject();
    if (c === "[") return this.parseArray();
    if (c === '"') return this.parseString();
    if (c === "t" || c === "f" || c === "n") return this.parseKeyword();
    if (c === "-" || (c >= "0" && c <= "9")) return this.parseNumber();
    this.fail(`unexpected character ${JSON.stringify(c)}`);
  }

  parseKeyword(): JValue {
    for (const [word, value] of [["true", true], ["false", false], ["null", null]] as const) {
      if (this.text.startsWith(word, this.pos)) {
        this.pos += word.length;
        return value;
      }
    }
    this.fail("unexpected token");
  }

  parseNumber(): number | Real {
    const m = /^-?(?:0|[1-9]\d*)(\.\d+)?([eE][+-]?\d+)?/.exec(this.text.slice(this.pos));
    if (m === null || m[0] === "" ) this.fail("bad number");
    this.pos += m[0].length;
    const isFloat = m[1] !== undefined || m[2] !== undefined;
    const value = Number(m[0]);
    if (isFloat) return new Real(value);
    if (!Number.isSafeInteger(value)) {
      this.fail(`integer ${m[0]} exceeds exact range`);
    }
    return value;
  }

  parseString(): string {
    // Delegate escape handling to JSON.parse on the raw token.
    const start = this.pos;
    this.pos++; // opening quote
    while (this.pos < this.text.length) {
      const c = this.text[this.pos];
      if (c === "\\") {
        this.pos += 2;
        continue;
      }
      if (c === '"') {
        this.pos++;
        const raw = this.text.slice(start, this.pos);
        try {
          return JSON.parse(raw) as string;
        } catch {
          this.fail("bad string literal");
        }
      }
      this.pos++;
    }
    this.fail("unterminated string");
  }

  parseArray(): JValue[] {
    this.pos++; // [
    const out: JValue[] = [];
    this.skipWs();
    if (this.text[this.pos] === "]") {
      this.pos++;
      return out;
    }
    for (;;) {
      out.push(this.parseValue());
      this.skipWs();
      const c = this.text[this.pos];
      if (c === ",") {
        this.pos++;
      } else if (c === "]") {
        this.pos++;
        return out;
      } else {
        this.fail("expected , or ] in array");
      }
    }
  }

  parseObject(): JObject {
    this.pos++; // {
    const out: JObject = {};
    this.skipWs();
    if (this.text[this.pos] === "}") {
      this.pos++;
      return out;
    }
    for (;;) {
      this.skipWs();
      if (this.text[this.pos] !== '"') this.fail("expected object key");
      const key = this.parseString();
      this.skipWs();
      if (this.text[this.pos] !== ":") this.fail("expected : after key");
      this.pos++;
      out[key] = this.parseValue(); // last duplicate key wins
      this.skipWs();
      const c = this.text[this.pos];
      if (c === ",") {
        this.pos++;
      } else if (c === "}") {
        this.pos++;
        return out;
      } else {
        this.fail("expected , or } in object");
      }
    }
  }
}

/**
 * Parse JSON, tagging each float-syntax number token as a {@link Real}.
 * Round-trips: `canonicalJson(parseTaggedJson(s)) === s` for canonical `s`.
 */
export function parseTaggedJson(text: string): JValue {
  const p = new Parser(text);
  const v = p.parseValue();
  p.skipWs();
  if (p.pos !== text.length) p.fail("trailing data after JSON value");
  return v;
}

// ---------------------------------------------------------------------------
// sha256 (FIPS 180-4) — dependency-free and synchronous so the same code
// runs in the browser and under Node.
// ---------------------------------------------------------------------------

const K = new Uint32Array([
  0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1,
  0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
  0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
  0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
  0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
  0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
  0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
  0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
  0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
  0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
  0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2,
]);

export function sha256(data: Uint8Array): Uint8Array {
  const bitLen = data.length * 8;
  // Pad to a multiple of 64 bytes: 0x80, zeros, 64-bit big-endian length.
  const padded = new Uint8Array(((data.length + 8) >> 6) * 64 + 64);
  padded.set(data);
  padded[data.length] = 0x80;
  const dv = new DataView(padded.buffer);
  dv.setUint32(padded.length - 8, Math.floor(bitLen / 0x100000000));
  dv.setUint32(padded.length - 4, bitLen >>> 0);

  let h0 = 0x6a09e667, h1 = 0xbb67ae85, h2 = 0x3c6ef372, h3 = 0xa54ff53a;
  let h4 = 0x510e527f, h5 = 0x9b05688c, h6 = 0x1f83d9ab, h7 = 0x5be0cd19;
  const w = new Uint32Array(64);

  for (let block = 0; block < padded.length; block += 64) {
    for (let t = 0; t < 16; t++) {
      w[t] = dv.getUint32(block + t * 4);
    }
    for (let t = 16; t < 64; t++) {
      const x = w[t - 15];
      const y = w[t - 2];
      const s0 = ((x >>> 7) | (x << 25)) ^ ((x >>> 18) | (x << 14)) ^ (x >>> 3);
      const s1 = ((y >>> 17) | (y << 15)) ^ ((y >>> 19) | (y << 13)) ^ (y >>> 10);
      w[t] = (w[t - 16] + s0 + w[t - 7] + s1) >>> 0;
    }
    let a = h0, b = h1, c = h2, d = h3, e = h4, f = h5, g = h6, h = h7;
    for (let t = 0; t < 64; t++) {
      const S1 = ((e >>> 6) | (e << 26)) ^ ((e >>> 11) | (e << 21)) ^ ((e >>> 25) | (e << 7));
      const ch = (e & f) ^ (~e & g);
      const t1 = (h + S1 + ch + K[t] + w[t]) >>> 0;
      const S0 = ((a >>> 2) | (a << 30)) ^ ((a >>> 13) | (a << 19)) ^ ((a >>> 22) | (a << 10));
      const maj = (a & b) ^ (a & c) ^ (b & c);
      const t2 = (S0 + maj) >>> 0;
      h = g; g = f; f = e; e = (d + t1) >>> 0;
      d = c; c = b; b = a; a = (t1 + t2) >>> 0;
    }
    h0 = (h0 + a) >>> 0; h1 = (h1 + b) >>> 0; h2 = (h2 + c) >>> 0; h3 = (h3 + d) >>> 0;
    h4 = (h4 + e) >>> 0; h5 = (h5 + f) >>> 0; h6 = (h6 + g) >>> 0; h7 = (h7 + h) >>> 0;
  }

  const out = new Uint8Array(32);
  const ov = new DataView(out.buffer);
  ov.setUint32(0, h0); ov.setUint32(4, h1); ov.setUint32(8, h2); ov.setUint32(12, h3);
  ov.setUint32(16, h4); ov.setUint32(20, h5); ov.setUint32(24, h6); ov.setUint32(28, h7);
  return out;
}

export function sha256Hex(data: Uint8Array): string {
  let hex = "";
  for (const byte of sha256(data)) {
    hex += byte.toString(16).padStart(2, "0");
  }
  return hex;
}
