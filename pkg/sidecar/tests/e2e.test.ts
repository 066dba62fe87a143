import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import os from "node:os";
import path from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

const HERE = path.dirname(fileURLToPath(import.meta.url));
const MAIN = path.join(HERE, "..", "dist", "main.js");
const FIXTURES = path.join(HERE, "fixtures");
const MANIFEST = path.join(FIXTURES, "manifest.jsonl");
const MODEL = path.join(FIXTURES, "adapted.lm");

function rerank(extraArgs: string[], outDir: string, tag: string) {
  const out = path.join(outDir, `${tag}.tsv`);
  const report = path.join(outDir, `${tag}.json`);
  const result = spawnSync(
    "nbestkit",
    [
      "rerank",
      "--manifest", MANIFEST,
      "--n", "5",
      "--out", out,
      "--report", report,
      "--format", "structured",
      ...extraArgs,
    ],
    { encoding: "utf-8" },
  );
  expect(result.error, String(result.error)).toBeUndefined();
  expect(result.status, result.stderr).toBe(0);
  return { out: readFileSync(out), report: readFileSync(report) };
}

// the primary CLI drives this sidecar exactly as it would any scorer
// command; with both backed by the same model file, every byte of the
// rerank output must agree with in-process scoring
describe("end-to-end against the primary CLI", () => {
  it("produces byte-identical rerank output to in-process scoring", () => {
    const dir = mkdtempSync(path.join(os.tmpdir(), "e2e-"));
    const inProcess = rerank(["--lm", MODEL], dir, "in-process");
    const viaSidecar = rerank(
      ["--scorer-cmd", `${process.execPath} ${MAIN} --model ${MODEL}`],
      dir,
      "sidecar",
    );
    expect(viaSidecar.out.equals(inProcess.out)).toBe(true);
    expect(viaSidecar.report.equals(inProcess.report)).toBe(true);
  });

  it("is deterministic across separate sidecar processes", () => {
    const dir = mkdtempSync(path.join(os.tmpdir(), "e2e-"));
    const first = rerank(
      ["--scorer-cmd", `${process.execPath} ${MAIN} --model ${MODEL}`],
      dir,
      "first",
    );
    const second = rerank(
      ["--scorer-cmd", `${process.execPath} ${MAIN} --model ${MODEL}`],
      dir,
      "second",
    );
    expect(second.out.equals(first.out)).toBe(true);
    expect(second.report.equals(first.report)).toBe(true);
  });
});
