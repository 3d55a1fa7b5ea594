import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const HERE = dirname(fileURLToPath(import.meta.url));

export function loadFixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(HERE, "fixtures", name), "utf-8")) as T;
}

export interface HsvFixture {
  cols: number;
  rows: number;
  max_magnitude: number;
  payload_b64: string;
  rgb_b64: string;
}

export interface FgmvFixture {
  cols: number;
  rows: number;
  has_pad_column: boolean;
  payload_b64: string;
  dx: number[];
  dy: number[];
  sad: number[];
}
