"""Small generated corpora for sanity checks and demos.

``overfit_corpus`` draws sentences from a handful of templates over a toy
lexicon (categories up to depth 3) and plants one category type exactly once.
``compositional_corpora`` builds a train/test pair in which the test side holds
a functor type never seen in training whose result is signalled by the left
neighbour and whose argument is signalled by the right neighbour.
"""
from __future__ import annotations

import numpy as np

from .corpus import Corpus, make_corpus

LEXICON = {
    "NP": ["john", "mary", "it", "they"],
    "N": ["dog", "cat", "idea", "park"],
    "NP/N": ["the", "a", "every"],
    "N/N": ["big", "red", "old"],
    "S[dcl]\\NP": ["sleeps", "runs", "laughs"],
    "(S[dcl]\\NP)/NP": ["sees", "likes", "finds"],
    "((S[dcl]\\NP)/NP)/NP": ["gives", "sends"],
    "(S[dcl]\\NP)/PP": ["relies", "looks"],
    "PP/NP": ["on", "at", "in"],
    "(S\\NP)\\(S\\NP)": ["quickly", "often"],
}

TEMPLATES = [
    ["NP/N", "N", "(S[dcl]\\NP)/NP", "NP/N", "N"],
    ["NP", "S[dcl]\\NP"],
    ["NP/N", "N/N", "N", "((S[dcl]\\NP)/NP)/NP", "NP", "NP"],
    ["NP", "(S[dcl]\\NP)/PP", "PP/NP", "NP/N", "N"],
    ["NP", "S[dcl]\\NP", "(S\\NP)\\(S\\NP)"],
    ["NP/N", "N/N", "N", "(S[dcl]\\NP)/NP", "NP"],
]

SINGLETON_CATEGORY = "((S[ng]\\NP)/PP)/NP"
SINGLETON_WORD = "handing"


def overfit_corpus(n_sentences: int = 20, seed: int = 0) -> Corpus:
    """``n_sentences`` template sentences; the last one carries the singleton type."""
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(n_sentences - 1):
        template = TEMPLATES[rng.integers(len(TEMPLATES))]
        rows.append([(str(rng.choice(LEXICON[c])), c) for c in template])
    rows.append([("mary", "NP"), (SINGLETON_WORD, SINGLETON_CATEGORY), ("john", "NP"),
                 ("on", "PP/NP"), ("it", "NP")])
    return make_corpus(rows, "overfit")


# result side chosen by the left cue word, argument side by the right cue word
RESULT_CUES = {"S[dcl]": "cue_dcl", "S[b]": "cue_b", "S[ng]": "cue_ng", "S[pt]": "cue_pt"}
ARGUMENT_CUES = {"NP": "obj_np", "PP": "obj_pp", "N": "obj_n", "S[em]": "obj_em"}
HELD_OUT = ("S[pt]", "N")
FILLERS = ["and", "then", "so", "but"]


def _cue_sentence(rng, result, argument, functor_word="vb"):
    row = []
    if rng.random() < 0.5:
        row.append((str(rng.choice(FILLERS)), "conj"))
    row.append((RESULT_CUES[result], "NP"))
    row.append((functor_word, f"{result}/{argument}"))
    row.append((ARGUMENT_CUES[argument], argument))
    if rng.random() < 0.5:
        row.append((str(rng.choice(FILLERS)), "conj"))
    return row


def compositional_corpora(copies: int = 6, seed: int = 0) -> tuple[Corpus, Corpus, str]:
    """Return ``(train, test, held_out_infix)``.

    Training covers every result/argument pairing except :data:`HELD_OUT`,
    ``copies`` times each; the test corpus repeats the held-out pairing.
    """
    rng = np.random.default_rng(seed)
    train_rows = []
    for _ in range(copies):
        for r in RESULT_CUES:
            for a in ARGUMENT_CUES:
                if (r, a) != HELD_OUT:
                    train_rows.append(_cue_sentence(rng, r, a))
    order = rng.permutation(len(train_rows))
    train_rows = [train_rows[i] for i in order]
    test_rows = [_cue_sentence(rng, *HELD_OUT) for _ in range(copies)]
    return make_corpus(train_rows, "compositional.train"), make_corpus(test_rows, "compositional.test"), \
        f"{HELD_OUT[0]}/{HELD_OUT[1]}"
