/**
 * Reader and scorer for versioned n-gram model files.
 *
 * The file is two lines: a "nbestkit-ngram v1" header and a JSON body
 * holding the vocabulary (ordered by token id), the count tables and
 * the smoothing weight.  Scoring reproduces the trainer's arithmetic
 * exactly: P(t | ctx) = (count + k) / (total + k * (|V| - 1)), with
 * sentence boundaries padded by <s>/</s> and OOV words mapped to
 * <unk>.  Unlike the trainer, no text normalization happens here; the
 * sidecar scores exactly the characters it is handed, and casing or
 * punctuation policy belongs to the caller.
 */
import { readFileSync } from "node:fs";

export const UNK = "<unk>";
export const BOS = "<s>";
export const EOS = "</s>";

const FORMAT_NAME = "nbestkit-ngram";
const FORMAT_VERSION = 1;

export class ModelFormatError extends Error {}

export interface ScoreResult {
  logprob: number;
  tokenCount: number;
}

type CountPairs = [string, number][];
type ContextEntry = [string[], CountPairs];

interface ModelBody {
  order: number;
  k: number;
  vocab: string[];
  counts: Record<string, ContextEntry[]>;
}

function contextKey(context: readonly string[]): string {
  return JSON.stringify(context);
}

export class NGramModel {
  readonly order: number;
  readonly k: number;
  readonly vocab: Set<string>;
  private readonly table: Map<string, Map<string, number>>;
  private readonly totals: Map<string, number>;

  constructor(order: number, k: number, vocab: string[], topCounts: ContextEntry[]) {
    if (!Number.isInteger(order) || order < 1) {
      throw new ModelFormatError(`order must be an integer >= 1, got ${order}`);
    }
    if (!Number.isFinite(k) || k < 0) {
      throw new ModelFormatError(`smoothing k must be >= 0, got ${k}`);
    }
    for (const reserved of [UNK, BOS, EOS]) {
      if (!vocab.includes(reserved)) {
        throw new ModelFormatError(`vocabulary is missing reserved token ${reserved}`);
      }
    }
    this.order = order;
    this.k = k;
    this.vocab = new Set(vocab);
    this.table = new Map();
    this.totals = new Map();
    for (const [ctx, pairs] of topCounts) {
      const key = contextKey(ctx);
      const counter = new Map<string, number>();
      let total = 0;
      for (const [token, count] of pairs) {
        counter.set(token, count);
        total += count;
      }
      this.table.set(key, counter);
      this.totals.set(key, total);
    }
  }

  /** Token types the model can predict; BOS is context-only. */
  get effectiveVocabSize(): number {
    return this.vocab.size - 1;
  }

  private lookup(token: string): string {
    return this.vocab.has(token) ? token : UNK;
  }

  prob(token: string, context: readonly string[]): number {
    const mapped = this.lookup(token);
    let ctx = context.map((t) => this.lookup(t));
    if (ctx.length > this.order - 1) {
      ctx = ctx.slice(ctx.length - (this.order - 1));
    }
    while (ctx.length < this.order - 1) {
      ctx.unshift(BOS);
    }
    const key = contextKey(ctx);
    const count = this.table.get(key)?.get(mapped) ?? 0;
    const total = this.totals.get(key) ?? 0;
    const denom = total + this.k * this.effectiveVocabSize;
    if (denom === 0) {
      return 0;
    }
    return (count + this.k) / denom;
  }

  /**
   * Natural-log probability of the text plus the number of scored
   * positions.  Tokens are whitespace-split from the text as given,
   * OOV-mapped, and scored left to right including the closing EOS,
   * so tokenCount = words + 1 and empty text still scores one
   * position.
   */
  score(text: string): ScoreResult {
    const words = text.split(/\s+/u).filter((w) => w.length > 0);
    const tokens = words.map((w) => this.lookup(w));
    tokens.push(EOS);
    let ctx: string[] = new Array(this.order - 1).fill(BOS);
    let logprob = 0;
    for (const token of tokens) {
      const p = this.prob(token, ctx);
      logprob += p > 0 ? Math.log(p) : -Infinity;
      if (this.order > 1) {
        ctx = ctx.slice(1);
        ctx.push(token);
      }
    }
    return { logprob, tokenCount: tokens.length };
  }
}

export function parseModel(content: string): NGramModel {
  const newline = content.indexOf("\n");
  const header = (newline === -1 ? content : content.slice(0, newline)).trim();
  const parts = header.split(/\s+/);
  if (parts.length !== 2 || parts[0] !== FORMAT_NAME || !parts[1]?.startsWith("v")) {
    throw new ModelFormatError(`not a ${FORMAT_NAME} file: header ${JSON.stringify(header)}`);
  }
  if (parts[1] !== `v${FORMAT_VERSION}`) {
    throw new ModelFormatError(
      `unsupported model version ${parts[1]}; this build reads v${FORMAT_VERSION}`,
    );
  }
  let body: ModelBody;
  try {
    body = JSON.parse(content.slice(newline + 1)) as ModelBody;
  } catch (err) {
    throw new ModelFormatError(`corrupt model body: ${(err as Error).message}`);
  }
  if (!Array.isArray(body.vocab) || typeof body.counts !== "object" || body.counts === null) {
    throw new ModelFormatError("corrupt model body: missing vocab or counts");
  }
  const top = body.counts[String(body.order)] ?? [];
  return new NGramModel(body.order, body.k, body.vocab, top);
}

export function loadModel(path: string): NGramModel {
  return parseModel(readFileSync(path, "utf-8"));
}
