import math
import os
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nbestkit import ngram
from nbestkit.errors import DataError, ModelFormatError
from nbestkit.ngram import BOS, EOS, UNK, NGramModel
from nbestkit.normalize import NormalizationProfile

GOLDEN = os.path.join(os.path.dirname(__file__), "data", "tiny.lm")


def uniform_model(n_effective: int = 10, order: int = 2, k: float = 0.5) -> NGramModel:
    vocab = {UNK: 0, BOS: 1, EOS: 2}
    for i in range(n_effective - 2):
        vocab[f"t{i:02d}"] = len(vocab)
    return NGramModel(order=order, k=k, vocab=vocab, counts={})


def test_unigram_hand_computed():
    model = ngram.train(["α β"], order=1, k=1.0)
    assert model.vocab == {UNK: 0, BOS: 1, EOS: 2, "α": 3, "β": 4}
    assert model.effective_vocab_size == 4
    # counts: α 1, β 1, EOS 1 over total 3; add-1 over 4 types
    assert model.prob("α", []) == pytest.approx(2 / 7)
    assert model.prob(UNK, []) == pytest.approx(1 / 7)
    assert model.prob("άγνωστο", []) == pytest.approx(1 / 7)


def test_bigram_hand_computed():
    model = ngram.train(["α β"], order=2, k=1.0)
    assert model.prob("α", []) == pytest.approx(2 / 5)
    assert model.prob("β", ["α"]) == pytest.approx(2 / 5)
    assert model.prob(EOS, ["β"]) == pytest.approx(2 / 5)
    lp, count = model.logprob("α β")
    assert count == 3
    assert lp == pytest.approx(3 * math.log(2 / 5))
    assert model.perplexity("α β") == pytest.approx(2.5)


def test_empty_sentence_scores_one_eos():
    model = ngram.train(["α β"], order=2, k=1.0)
    lp, count = model.logprob("")
    assert count == 1
    assert lp == pytest.approx(math.log(model.prob(EOS, [])))


def test_bos_is_never_predicted():
    model = ngram.train(["α β", "β α"], order=2, k=0.1)
    dist = model.next_distribution(["α"])
    assert BOS not in dist
    assert set(dist) == set(model.vocab) - {BOS}


def test_distributions_sum_to_one(model):
    rng = random.Random(7)
    vocab = sorted(model.vocab)
    for _ in range(25):
        context = [rng.choice(vocab) for _ in range(rng.randint(0, 3))]
        total = sum(model.next_distribution(context).values())
        assert total == pytest.approx(1.0, abs=1e-9)


def test_uniform_model_is_flat_and_ppl_equals_vocab_size():
    model = uniform_model(10)
    assert model.effective_vocab_size == 10
    for token in ("t00", "t07", EOS, UNK, "έξω"):
        assert model.prob(token, ["t01"]) == pytest.approx(1 / 10, abs=1e-12)
    for sentence in ("", "t00", "t00 t01 t02", "άσχετες λέξεις"):
        assert model.perplexity(sentence) == pytest.approx(10.0, rel=1e-9)


def test_training_normalizes_input_first():
    assert ngram.train(["Ναι, Γιατρέ"]) == ngram.train(["ναι, γιατρέ"])
    stripped = NormalizationProfile(strip_punctuation=True)
    a = ngram.train(["Ναι, όχι!"], profile=stripped)
    b = ngram.train(["ναι όχι"], profile=stripped)
    assert a == b


def test_min_count_folds_rare_tokens_to_unk():
    model = ngram.train(["α α β"], order=1, k=0.5, min_count=2)
    assert "β" not in model.vocab
    assert "α" in model.vocab
    assert model.logprob("α β") == model.logprob(f"α {UNK}")


def test_explicit_vocab_wins_over_counting():
    model = ngram.train(["α β γ"], order=1, k=0.5, vocab=["α"])
    assert "β" not in model.vocab and "γ" not in model.vocab
    assert model.vocab["α"] == 3


def test_zero_k_gives_zero_probability_and_infinite_ppl():
    model = ngram.train(["α β"], order=2, k=0.0)
    assert model.prob("β", ["β"]) == 0.0
    lp, _ = model.logprob("β β")
    assert lp == -math.inf
    assert model.perplexity("β β") == math.inf


def test_verbatim_beats_corrupted(model, corpus):
    rng = random.Random(3)
    for sentence in rng.sample(corpus, 25):
        words = sentence.split()
        corrupted = list(words)
        corrupted[rng.randrange(len(corrupted))] = "ξξξ"
        assert model.perplexity(sentence) < model.perplexity(" ".join(corrupted))


def test_real_word_order_beats_shuffled(model, corpus):
    rng = random.Random(5)
    sample = rng.sample(corpus, 50)
    shuffled = []
    for sentence in sample:
        words = sentence.split()
        rng.shuffle(words)
        shuffled.append(" ".join(words))
    assert ngram.perplexity_corpus(model, sample) < ngram.perplexity_corpus(model, shuffled)


def test_more_evidence_lowers_perplexity():
    target = "α β γ"
    other = "δ ε ζ"
    sparse = ngram.train([target] + [other] * 5, order=2, k=0.1)
    dense = ngram.train([target] * 5 + [other], order=2, k=0.1)
    assert dense.perplexity(target) < sparse.perplexity(target)


def test_perplexity_corpus_is_token_weighted(model):
    sentences = ["δεν αναφέρει αλλεργίες", "ο ασθενής εξήλθε σε καλή γενική κατάσταση"]
    lps = [model.logprob(s) for s in sentences]
    expected = math.exp(-sum(lp for lp, _ in lps) / sum(c for _, c in lps))
    assert ngram.perplexity_corpus(model, sentences) == pytest.approx(expected, rel=1e-12)


def test_perplexity_corpus_rejects_empty():
    with pytest.raises(DataError):
        ngram.perplexity_corpus(uniform_model(), [])


def test_train_rejects_empty_corpus_and_bad_params():
    with pytest.raises(DataError):
        ngram.train([])
    with pytest.raises(DataError):
        ngram.train(["α"], order=0)
    with pytest.raises(DataError):
        ngram.train(["α"], k=-0.5)


@given(st.lists(st.lists(st.sampled_from("αβγ"), min_size=1, max_size=5).map(" ".join),
                min_size=1, max_size=8))
@settings(max_examples=100, deadline=None)
def test_distribution_sums_to_one_for_any_training_corpus(sentences):
    model = ngram.train(sentences, order=2, k=0.3)
    for context in ([], ["α"], ["β", "γ"], ["ξ"]):
        assert sum(model.next_distribution(context).values()) == pytest.approx(1.0, abs=1e-9)


def test_save_load_round_trip(tmp_path, model):
    path = tmp_path / "m.lm"
    model.save(str(path))
    loaded = ngram.load(str(path))
    assert loaded == model
    for sentence in ("δεν αναφέρει αλλεργίες", "άγνωστες λέξεις εδώ"):
        assert loaded.logprob(sentence) == model.logprob(sentence)
    assert ngram.serialize_model(loaded) == ngram.serialize_model(model)


def test_golden_model_file_stays_readable():
    model = ngram.load(GOLDEN)
    assert model.order == 2 and model.k == 0.5
    assert model.prob("όχι", ["ναι"]) == pytest.approx(0.375)
    assert model.prob("ναι", []) == pytest.approx(0.5)
    lp, count = model.logprob("ναι όχι")
    assert count == 3
    assert lp == pytest.approx(-2.1439800628174073, rel=1e-12)
    assert model.perplexity("ναι όχι") == pytest.approx(2.0434918197161416, rel=1e-12)
    with open(GOLDEN, encoding="utf-8") as fp:
        assert ngram.serialize_model(model) == fp.read()


def test_load_rejects_wrong_header(tmp_path):
    path = tmp_path / "bad.lm"
    path.write_text("something else v1\n{}\n", encoding="utf-8")
    with pytest.raises(ModelFormatError, match="header"):
        ngram.load(str(path))


def test_load_rejects_future_version(tmp_path):
    path = tmp_path / "future.lm"
    path.write_text("nbestkit-ngram v2\n{}\n", encoding="utf-8")
    with pytest.raises(ModelFormatError, match="version"):
        ngram.load(str(path))


def test_load_rejects_corrupt_body(tmp_path):
    path = tmp_path / "corrupt.lm"
    path.write_text("nbestkit-ngram v1\n{not json\n", encoding="utf-8")
    with pytest.raises(ModelFormatError, match="corrupt"):
        ngram.load(str(path))
    path.write_text('nbestkit-ngram v1\n{"order": 2}\n', encoding="utf-8")
    with pytest.raises(ModelFormatError):
        ngram.load(str(path))


def test_load_missing_file_raises_oserror(tmp_path):
    with pytest.raises(OSError):
        ngram.load(str(tmp_path / "absent.lm"))
