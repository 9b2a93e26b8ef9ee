/** Shared test helpers: running the reference Python implementation. */

import { execFileSync } from "node:child_process";
import * as path from "node:path";
import { fileURLToPath } from "node:url";

export const REPO_ROOT = path.resolve(
  path.dirname(fileURLToPath(import.meta.url)), "..", "..");

/** Run a Python snippet against the installed reference package and
 * return its stdout. */
export function py(code: string, input = ""): string {
  return execFileSync("python3", ["-c", code], {
    input,
    encoding: "utf8",
    cwd: REPO_ROOT,
    maxBuffer: 256 * 1024 * 1024,
  });
}

/** Run a Python script file (path relative to the repo root). */
export function pyFile(relPath: string, args: string[] = []): string {
  return execFileSync("python3", [relPath, ...args], {
    encoding: "utf8",
    cwd: REPO_ROOT,
    maxBuffer: 256 * 1024 * 1024,
  });
}

export function hexToBytes(hex: string): Uint8Array {
  const out = new Uint8Array(hex.length / 2);
  for (let i = 0; i < out.length; i++) {
    out[i] = parseInt(hex.slice(2 * i, 2 * i + 2), 16);
  }
  return out;
}

export function bytesToHex(bytes: Uint8Array): string {
  return [...bytes].map((b) => b.toString(16).padStart(2, "0")).join("");
}

/** Deterministic 64-bit generator (splitmix64) for reproducible corpora. */
export function splitmix64(seed: bigint): () => bigint {
  let state = seed & 0xffffffffffffffffn;
  return () => {
    state = (state + 0x9e3779b97f4a7c15n) & 0xffffffffffffffffn;
    let z = state;
    z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & 0xffffffffffffffffn;
    z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & 0xffffffffffffffffn;
    return z ^ (z >> 31n);
  };
}

export function bitsToFloat(bits: bigint): number {
  const buf = new DataView(new ArrayBuffer(8));
  buf.setBigUint64(0, bits);
  return buf.getFloat64(0);
}

export function floatToBitsHex(x: number): string {
  const buf = new DataView(new ArrayBuffer(8));
  buf.setFloat64(0, x);
  return buf.getBigUint64(0).toString(16).padStart(16, "0");
}
