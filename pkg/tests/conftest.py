"""Shared fixtures: a deterministic Greek clinical-style text corpus,
a bigram model trained on it, and a synthetic manifest derived from it.
Everything is seeded so test runs are reproducible."""
import random

import pytest

from nbestkit import ngram
from nbestkit.synth import generate_manifest

_POOLS = {
    "verb": ("προσήλθε", "εισήχθη", "εξετάστηκε", "παραπέμφθηκε", "επανεκτιμήθηκε"),
    "qual": ("οξύ", "ήπιο", "επίμονο", "διαλείπον", "έντονο"),
    "symptom": ("θωρακικό άλγος", "κοιλιακό άλγος", "οσφυϊκό άλγος", "αίσθημα παλμών"),
    "exam": ("ακτινογραφία", "αξονική τομογραφία", "μαγνητική τομογραφία"),
    "organ": ("θώρακος", "κοιλίας", "εγκεφάλου", "σπονδυλικής στήλης"),
    "finding": (
        "ήταν φυσιολογική",
        "ανέδειξε παθολογικά ευρήματα",
        "ήταν χωρίς ευρήματα",
        "ανέδειξε ήπιες αλλοιώσεις",
    ),
    "finding_n": ("ήταν φυσιολογικό", "ανέδειξε παθολογικά ευρήματα", "ήταν χωρίς ευρήματα"),
    "drug": ("αντιβιοτική", "αντιπηκτική", "αντιυπερτασική", "βρογχοδιασταλτική", "αναλγητική"),
    "num": ("δύο", "τρεις", "πέντε", "επτά", "δέκα"),
    "treatment": ("αγωγή", "χορήγηση υγρών", "αντιπυρετική αγωγή"),
    "lab": ("γενική αίματος", "γενική ούρων", "βιοχημική εξέταση"),
    "lab_result": ("λευκοκυττάρωση", "αναιμία", "θρομβοπενία", "φυσιολογικές τιμές"),
    "state": ("καλή", "σταθερή", "βελτιωμένη"),
    "clean": ("καθαρή", "φυσιολογική", "χωρίς επιπρόσθετους ήχους"),
    "neg": ("αλλεργίες", "συμπτώματα", "ενοχλήματα", "προηγούμενα νοσήματα"),
}

_TEMPLATES = (
    "ο ασθενής {verb} με {qual} {symptom}",
    "η {exam} {organ} {finding}",
    "χορηγήθηκε {drug} αγωγή για {num} ημέρες",
    "ο πυρετός υποχώρησε μετά την {treatment}",
    "η {lab} έδειξε {lab_result}",
    "συστήνεται επανέλεγχος σε {num} εβδομάδες",
    "ο ασθενής εξήλθε σε {state} γενική κατάσταση",
    "η ακρόαση πνευμόνων ήταν {clean}",
    "δεν αναφέρει {neg}",
    "το υπερηχογράφημα {organ} {finding_n}",
)


def build_corpus(n_sentences: int = 600, seed: int = 20240501) -> list[str]:
    rng = random.Random(seed)
    sentences = []
    for _ in range(n_sentences):
        template = rng.choice(_TEMPLATES)
        slots = {
            key: rng.choice(values)
            for key, values in _POOLS.items()
            if "{" + key + "}" in template
        }
        sentences.append(template.format(**slots))
    return sentences


@pytest.fixture(scope="session")
def corpus():
    return build_corpus()


@pytest.fixture(scope="session")
def model(corpus):
    return ngram.train(corpus, order=2, k=0.1)


@pytest.fixture(scope="session")
def synth_utterances(corpus):
    return generate_manifest(corpus, n_candidates=8, seed=11)


@pytest.fixture(scope="session")
def model_file(model, tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "fixture.lm"
    model.save(str(path))
    return str(path)
