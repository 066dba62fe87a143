import path from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { loadModel, ModelFormatError, NGramModel, parseModel } from "../src/model.js";

const FIXTURES = path.join(path.dirname(fileURLToPath(import.meta.url)), "fixtures");

const adapted = loadModel(path.join(FIXTURES, "adapted.lm"));
const base = loadModel(path.join(FIXTURES, "base.lm"));

// values recorded once from the reference implementation that wrote
// the fixture files, scoring the same strings with the same models
const RECORDED = {
  inDomain: "ο ασθενής αναφέρει οξύ άλγος",
  adaptedLogprob: -18.949494604527647,
  baseLogprob: -28.112361769650764,
  adaptedPpl: 23.529362298942395,
  basePpl: 108.35291468592325,
  empty: -6.104793232414985,
  knownWord: -11.39306026310952,
  singleOov: -11.1020055061791,
  trainingLine: -20.8303546179458,
};

function expectClose(actual: number, expected: number, rel = 1e-12) {
  expect(Math.abs(actual - expected)).toBeLessThanOrEqual(Math.abs(expected) * rel);
}

function ppl(model: NGramModel, text: string): number {
  const { logprob, tokenCount } = model.score(text);
  return Math.exp(-logprob / tokenCount);
}

describe("scoring", () => {
  it("matches the recorded scores of the implementation that trained the models", () => {
    const r = adapted.score(RECORDED.inDomain);
    expect(r.tokenCount).toBe(6);
    expectClose(r.logprob, RECORDED.adaptedLogprob);
    const line = adapted.score("η γενική αίματος ήταν εντός φυσιολογικών ορίων");
    expect(line.tokenCount).toBe(8);
    expectClose(line.logprob, RECORDED.trainingLine);
  });

  it("scores empty text as a single end-of-sentence position", () => {
    const r = adapted.score("");
    expect(r.tokenCount).toBe(1);
    expectClose(r.logprob, RECORDED.empty);
    expect(adapted.score("   \t ")).toEqual(r);
  });

  it("is deterministic", () => {
    const a = adapted.score(RECORDED.inDomain);
    const b = adapted.score(RECORDED.inDomain);
    expect(b.logprob).toBe(a.logprob);
    expect(b.tokenCount).toBe(a.tokenCount);
  });

  it("scores exactly the characters given, with no case folding", () => {
    const lower = adapted.score("ασθενής");
    const upper = adapted.score("ΑΣΘΕΝΉΣ");
    expectClose(lower.logprob, RECORDED.knownWord);
    // the uppercase form is out of vocabulary, so it takes the same
    // <unk> path as any other unknown single token
    expectClose(upper.logprob, RECORDED.singleOov);
    expectClose(adapted.score("ζζζ").logprob, RECORDED.singleOov);
    expect(upper.logprob).not.toBe(lower.logprob);
  });

  it("prefers in-domain text under the in-domain model", () => {
    const pplAdapted = ppl(adapted, RECORDED.inDomain);
    const pplBase = ppl(base, RECORDED.inDomain);
    expectClose(pplAdapted, RECORDED.adaptedPpl, 1e-9);
    expectClose(pplBase, RECORDED.basePpl, 1e-9);
    expect(pplAdapted).toBeLessThan(pplBase);
  });
});

function tinyModelFile(k: number): string {
  const body = {
    order: 1,
    k,
    min_count: 1,
    profile: {},
    vocab: ["<unk>", "<s>", "</s>", "α"],
    counts: { "1": [[[], [["</s>", 1], ["α", 2]]]] },
  };
  return "nbestkit-ngram v1\n" + JSON.stringify(body) + "\n";
}

describe("hand-checked arithmetic", () => {
  it("computes additive smoothing on a tiny unigram model", () => {
    const model = parseModel(tinyModelFile(0.5));
    expect(model.effectiveVocabSize).toBe(3);
    // P(α) = (2 + 0.5) / (3 + 0.5 * 3), P(</s>) = (1 + 0.5) / 4.5
    expect(model.prob("α", [])).toBe(2.5 / 4.5);
    expect(model.prob("</s>", [])).toBe(1.5 / 4.5);
    const r = model.score("α");
    expect(r.tokenCount).toBe(2);
    expect(r.logprob).toBe(Math.log(2.5 / 4.5) + Math.log(1.5 / 4.5));
  });

  it("spreads mass uniformly when there are no counts", () => {
    const uniform = new NGramModel(2, 0.7, ["<unk>", "<s>", "</s>", "α", "β"], []);
    expect(uniform.prob("α", ["β"])).toBe(1 / 4);
    expect(ppl(uniform, "α β")).toBeCloseTo(4, 9);
  });

  it("returns probability zero from an unsmoothed empty context", () => {
    const model = new NGramModel(1, 0, ["<unk>", "<s>", "</s>"], []);
    expect(model.prob("</s>", [])).toBe(0);
    expect(model.score("whatever").logprob).toBe(-Infinity);
  });
});

describe("model file parsing", () => {
  it("rejects a wrong header", () => {
    expect(() => parseModel("something else\n{}")).toThrow(ModelFormatError);
    expect(() => parseModel("something else\n{}")).toThrow(/not a nbestkit-ngram file/);
  });

  it("rejects unknown versions", () => {
    expect(() => parseModel("nbestkit-ngram v2\n{}")).toThrow(/unsupported model version v2/);
  });

  it("rejects a corrupt body", () => {
    expect(() => parseModel("nbestkit-ngram v1\n{not json")).toThrow(/corrupt model body/);
    expect(() => parseModel('nbestkit-ngram v1\n{"order": 2}')).toThrow(ModelFormatError);
  });

  it("rejects a vocabulary without the reserved tokens", () => {
    const body = { order: 1, k: 0.1, vocab: ["α"], counts: {} };
    expect(() => parseModel("nbestkit-ngram v1\n" + JSON.stringify(body))).toThrow(
      /reserved token/,
    );
  });
});
