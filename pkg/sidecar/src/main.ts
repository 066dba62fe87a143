#!/usr/bin/env node
/** Entry point: resolve the model, load it, then serve stdio. */
import { existsSync } from "node:fs";
import path from "node:path";
import { exit, stderr } from "node:process";
import { parseArgs } from "node:util";

import { loadModel, ModelFormatError } from "./model.js";
import { serve } from "./protocol.js";

const USAGE = `usage: nbestkit-scorer --model <name-or-path> [--device cpu] [--batch-size N]

Serves language-model scores over stdin/stdout: a one-line handshake,
then one JSON response per JSON request line.

  --model       model file path, or a bare name resolved as
                $NBESTKIT_MODEL_CACHE/<name>.lm
  --device      accepted for interface compatibility; this backend is
                CPU-only (default: cpu)
  --batch-size  internal batching hint; requests are answered one by
                one either way (default: 1)
`;

class UsageError extends Error {}

function resolveModelPath(spec: string): string {
  if (spec.includes(path.sep) || spec.endsWith(".lm") || existsSync(spec)) {
    return spec;
  }
  const cache = process.env.NBESTKIT_MODEL_CACHE;
  if (!cache) {
    throw new UsageError(
      `--model ${spec} is not a file and NBESTKIT_MODEL_CACHE is not set`,
    );
  }
  return path.join(cache, `${spec}.lm`);
}

function modelIdFor(modelPath: string): string {
  const stem = path.basename(modelPath).replace(/\.lm$/, "");
  // the handshake is whitespace-delimited, so the id must carry none
  return stem.replace(/\s+/gu, "-") || "model";
}

async function run(argv: string[]): Promise<number> {
  let values;
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        model: { type: "string" },
        device: { type: "string", default: "cpu" },
        "batch-size": { type: "string", default: "1" },
        help: { type: "boolean", short: "h", default: false },
      },
    }));
  } catch (err) {
    throw new UsageError((err as Error).message);
  }
  if (values.help) {
    process.stdout.write(USAGE);
    return 0;
  }
  if (!values.model) {
    throw new UsageError("--model is required");
  }
  const batchSize = Number(values["batch-size"]);
  if (!Number.isInteger(batchSize) || batchSize < 1) {
    throw new UsageError(`--batch-size wants an integer >= 1, got ${values["batch-size"]}`);
  }
  if (values.device !== "cpu") {
    stderr.write(`note: device ${values.device} requested; this backend runs on cpu\n`);
  }
  const modelPath = resolveModelPath(values.model);
  const model = loadModel(modelPath);
  await serve(model, modelIdFor(modelPath), process.stdin, process.stdout);
  return 0;
}

run(process.argv.slice(2))
  .then((code) => exit(code))
  .catch((err: unknown) => {
    if (err instanceof UsageError) {
      stderr.write(`usage error: ${err.message}\n${USAGE}`);
      exit(2);
    }
    const message =
      err instanceof ModelFormatError || err instanceof Error
        ? err.message
        : String(err);
    stderr.write(`error: ${message}\n`);
    exit(1);
  });
