import { execFileSync, spawnSync } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, describe, expect, it } from "vitest";

import { loadCheckpoint, saveCheckpointF64 } from "../src/safetensors.js";
import { scoreCheckpoint } from "../src/scorer.js";

const CLI = join(__dirname, "..", "dist", "cli.js");
const dir = mkdtempSync(join(tmpdir(), "harness-"));
afterAll(() => rmSync(dir, { recursive: true, force: true }));

function fixture(name: string, arrays: Record<string, number[]>): string {
  const path = join(dir, name);
  saveCheckpointF64(path, arrays);
  return path;
}

describe("safetensors reader", () => {
  it("round-trips an f64 checkpoint", () => {
    const path = fixture("rt.safetensors", { a: [1.5, -2.25], b: [0.5] });
    const tensors = loadCheckpoint(path);
    expect([...tensors.keys()].sort()).toEqual(["a", "b"]);
    expect([...tensors.get("a")!.values]).toEqual([1.5, -2.25]);
  });

  it("rejects a truncated file", () => {
    const path = fixture("trunc.safetensors", { a: [1, 2, 3] });
    const { readFileSync, writeFileSync } = require("node:fs");
    writeFileSync(path, readFileSync(path).subarray(0, 12));
    expect(() => loadCheckpoint(path)).toThrow(/truncated/);
  });
});

describe("scorer", () => {
  it("is deterministic and bounded", () => {
    const path = fixture("det.safetensors", { w: [0.25, -0.75, 1.5] });
    const req = { checkpointPath: path, categories: ["A", "B", "long_tail"] };
    const first = scoreCheckpoint(req);
    const second = scoreCheckpoint(req);
    expect(JSON.stringify(first)).toBe(JSON.stringify(second));
    for (const v of Object.values(first.scores)) {
      expect(v).toBeGreaterThanOrEqual(0);
      expect(v).toBeLessThanOrEqual(100);
      expect(Number.isFinite(v)).toBe(true);
    }
    expect(Object.keys(first.scores).sort()).toEqual(["A", "B", "long_tail"]);
  });

  it("depends only on tensor contents, not the file name", () => {
    const a = fixture("name-a.safetensors", { w: [1, 2] });
    const b = fixture("name-b.safetensors", { w: [1, 2] });
    const sa = scoreCheckpoint({ checkpointPath: a, categories: ["X"] });
    const sb = scoreCheckpoint({ checkpointPath: b, categories: ["X"] });
    expect(sa).toEqual(sb);
  });
});

describe("cli protocol", () => {
  it("prints exactly one JSON object and exits 0", () => {
    const path = fixture("cli.safetensors", { w: [0.1, 0.2] });
    const out = execFileSync(process.execPath, [
      CLI, "--checkpoint", path, "--categories", "A,B",
    ]).toString();
    const parsed = JSON.parse(out);
    expect(Object.keys(parsed)).toEqual(["scores"]);
    expect(Object.keys(parsed.scores).sort()).toEqual(["A", "B"]);
  });

  it("emits identical bytes on identical inputs", () => {
    const path = fixture("cli-det.safetensors", { w: [3, -1] });
    const run = () =>
      execFileSync(process.execPath, [
        CLI, "--checkpoint", path, "--categories", "A,B",
      ]).toString();
    expect(run()).toBe(run());
  });

  it("fails with a nonzero exit on a missing checkpoint", () => {
    const result = spawnSync(process.execPath, [
      CLI, "--checkpoint", join(dir, "nope.safetensors"), "--categories", "A",
    ]);
    expect(result.status).not.toBe(0);
    expect(result.stderr.toString()).not.toBe("");
  });

  it("fails on missing arguments", () => {
    const result = spawnSync(process.execPath, [CLI, "--checkpoint", "x"]);
    expect(result.status).toBe(2);
  });
});
