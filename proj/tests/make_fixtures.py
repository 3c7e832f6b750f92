#!/usr/bin/env python3
"""Generates the frozen oracle fixtures under tests/fixtures/.

Independent reference implementations, deliberately sharing no code with the
C++ tree:
  * mteval-v13a tokenization ported verbatim from the published sacreBLEU
    regexes (sacrebleu/tokenizers/tokenizer_13a.py),
  * BLEU from first principles (collections.Counter n-gram clipping) with
    exponential smoothing, zero-match short-circuit, and skip-short-orders
    geometric mean over max_order,
  * NFC via Python's unicodedata,
  * sentence-mean embedding arithmetic via plain floats.

Rerun with: python3 tests/make_fixtures.py
"""
import json
import math
import os
import random
import re
import unicodedata
from collections import Counter

OUT = os.path.join(os.path.dirname(__file__), "fixtures")


# ---------------------------------------------------------------------------
# 13a tokenizer (reference port)

_13A_RES = [
    (re.compile(r'([\{-\~\[-\` -\&\(-\+\:-\@\/])'), r' \1 '),
    (re.compile(r'([^0-9])([\.,])'), r'\1 \2 '),
    (re.compile(r'([\.,])([^0-9])'), r' \1 \2'),
    (re.compile(r'([0-9])(-)'), r'\1 \2 '),
]


def tok13a(line: str):
    line = line.replace('<skipped>', '')
    line = line.replace('-\n', '')
    line = line.replace('\n', ' ')
    if '&' in line:
        line = line.replace('&quot;', '"')
        line = line.replace('&amp;', '&')
        line = line.replace('&lt;', '<')
        line = line.replace('&gt;', '>')
    line = f' {line} '
    for (rx, repl) in _13A_RES:
        line = rx.sub(repl, line)
    return line.split()


def tok13a_nfc(line: str):
    return tok13a(unicodedata.normalize('NFC', line))


# ---------------------------------------------------------------------------
# BLEU reference

def ngrams(tokens, n):
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu_stats(hyp, ref, max_order=4):
    correct = [0] * max_order
    total = [0] * max_order
    for n in range(1, max_order + 1):
        hyp_counts = ngrams(hyp, n)
        if not hyp_counts:
            continue
        ref_counts = ngrams(ref, n)
        total[n - 1] = sum(hyp_counts.values())
        correct[n - 1] = sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
    return correct, total, len(hyp), len(ref)


def bleu_from_stats(correct, total, hyp_len, ref_len, max_order=4, smoothing='exp'):
    if hyp_len == 0:
        bp = 0.0
    elif hyp_len >= ref_len:
        bp = 1.0
    else:
        bp = math.exp(1.0 - ref_len / hyp_len)
    precisions = [0.0] * max_order
    if not any(correct):
        return {"score": 0.0, "precisions": precisions, "bp": bp,
                "hyp_len": hyp_len, "ref_len": ref_len}
    smooth_mult = 1.0
    for n in range(1, max_order + 1):
        if total[n - 1] == 0:
            break
        if correct[n - 1] == 0:
            if smoothing == 'exp':
                smooth_mult *= 2.0
                precisions[n - 1] = 1.0 / (smooth_mult * total[n - 1])
        else:
            precisions[n - 1] = correct[n - 1] / total[n - 1]
    log_sum = sum(math.log(p) for p in precisions if p > 0)
    score = 100.0 * bp * math.exp(log_sum / max_order)
    return {"score": score, "precisions": precisions, "bp": bp,
            "hyp_len": hyp_len, "ref_len": ref_len}


def doc_bleu(hyp, ref, max_order=4):
    return bleu_from_stats(*bleu_stats(hyp, ref, max_order), max_order=max_order)


def corpus_bleu(pairs, max_order=4):
    correct = [0] * max_order
    total = [0] * max_order
    hyp_len = ref_len = 0
    for hyp, ref in pairs:
        c, t, hl, rl = bleu_stats(hyp, ref, max_order)
        correct = [a + b for a, b in zip(correct, c)]
        total = [a + b for a, b in zip(total, t)]
        hyp_len += hl
        ref_len += rl
    return bleu_from_stats(correct, total, hyp_len, ref_len, max_order=max_order)


# ---------------------------------------------------------------------------
# Fixture builders

def make_nfc_cases():
    cases = [
        "abc",
        "Grün ist schön.",                   # u + combining diaeresis etc.
        "Grün ist schön.",                               # already composed
        "Ångström Å",                   # ring, singleton U+212B -> Å
        "ȩ́",                                 # cedilla+acute: ordering + composition
        "ȩ́",                                 # same marks, other input order
        "q̣̇",                                 # canonical ordering swap case
        "ḍ̇",                                  # d-dot-above + dot-below
        "क़",                                  # composition exclusion (stays decomposed)
        "각",                            # Hangul jamo -> syllable
        "각",                                        # already-composed Hangul
        "가",                                  # LV without T
        "Cáfé au lait",
        "À̖",                            # A + grave + combining below (ordering)
        "naïve naïve",
        "ｶﾞ",                                  # halfwidth katakana: compat chars untouched by NFC
        "ÅÅÅ",                      # three spellings of Angstrom
        "",
    ]
    rng = random.Random(7)
    marks = ['̀', '́', '̈', '̊', '̧', '̣', '̄']
    bases = list("aeiouAEIOUcCnNsz")
    for _ in range(60):
        s = []
        for _ in range(rng.randint(1, 12)):
            s.append(rng.choice(bases))
            for _ in range(rng.randint(0, 3)):
                s.append(rng.choice(marks))
        cases.append(''.join(s))
    return [{"input": c, "expected": unicodedata.normalize('NFC', c)} for c in cases]


def make_tok_cases():
    cases = [
        "abc",
        "",
        "Hello, world!",
        "1,000 dogs.",
        "A sentence. Another one?",
        "it's a test-case with under_scores and (parens) [brackets] {braces}",
        "prices: $5.30, 7,000.5 and 3.5-fold",
        "x<skipped>y and a-\nbreak plus\nnewline",
        "&quot;quoted&quot; &amp; ampersand &lt;tag&gt;",
        "digits 12-34 and word-dash stay 3.5 but 6- splits",
        "Grün ist schön, oder?",
        "Grün ist schön, oder?",        # decomposed; expected uses NFC
        "non breaking spaces　here",  # unicode whitespace splitting
        "ellipsis... and more.. one.",
        "mixed 1,2 3,x ,5 5, .",
        "a.. b,,. ,",
        "semi;colon co:lon sla/sh",
        "quote\"inside\" 'apostrophe'",
        "tab\tand  double  space",
        "trailing space ",
        " leading",
        "@handles #hashtags %percent ^caret",
        "4.5.6 1.2.3.4 versions",
        "Der Preis beträgt 1.234,56 € heute.",
    ]
    rng = random.Random(13)
    alphabet = list("abcXYZ123.,-!?\"'()&;:/ \t") + ['ä', 'ö', ' ', '日']
    for _ in range(40):
        cases.append(''.join(rng.choice(alphabet) for _ in range(rng.randint(1, 60))))
    return [{"input": c, "expected": tok13a_nfc(c)} for c in cases]


WORDS = ("the a this that cat dog house tree river city man woman child day night light "
         "green blue old new big small ran walked spoke found lost under over beside "
         "quickly slowly carefully government report number year market price").split()


def synth_sentence(rng, lo=4, hi=14):
    n = rng.randint(lo, hi)
    words = [rng.choice(WORDS) for _ in range(n)]
    words[0] = words[0].capitalize()
    return ' '.join(words) + rng.choice(['.', '.', '.', '!', '?'])


def perturb(rng, tokens):
    out = []
    for t in tokens:
        r = rng.random()
        if r < 0.08:
            continue                      # omission
        if r < 0.20:
            out.append(rng.choice(WORDS))  # substitution
        else:
            out.append(t)
        if rng.random() < 0.05:
            out.append(rng.choice(WORDS))  # hallucinated insertion
    return out


def make_bleu_cases():
    rng = random.Random(99)
    token_cases = []

    def add_tokens(hyp, ref, note):
        token_cases.append({"note": note, "hyp": hyp, "ref": ref, "doc": doc_bleu(hyp, ref)})

    add_tokens(["the", "cat", "sat"], ["the", "cat", "sat", "down"], "short identical prefix")
    add_tokens(["x1", "x2", "x3", "x4", "x5"], ["y1", "y2", "y3", "y4", "y5"],
               "fully disjoint 5 tokens")
    add_tokens(["a"], ["a"], "single identical token")
    add_tokens(["a", "b"], ["b", "a"], "swapped bigram")
    add_tokens(["the"] * 6, ["the", "the"], "clipping: repeated hypothesis tokens")

    for i in range(24):
        ref = []
        for _ in range(rng.randint(1, 4)):
            ref.extend(tok13a(synth_sentence(rng)))
        hyp = perturb(rng, ref)
        if not hyp:
            hyp = ["empty"]
        add_tokens(hyp, ref, f"synthetic pair {i}")

    corpus_pairs = [(c["hyp"], c["ref"]) for c in token_cases if c["hyp"]]
    corpus = corpus_bleu(corpus_pairs)

    string_cases = []

    def add_strings(hyp, ref, note):
        string_cases.append({
            "note": note, "hyp": hyp, "ref": ref,
            "doc": doc_bleu(tok13a_nfc(hyp), tok13a_nfc(ref)),
        })

    add_strings("The cat sat on the mat.", "The cat sat on the mat.", "identity")
    add_strings("", "The cat sat.", "empty hypothesis")
    add_strings("Der Hund lief schnell, oder?", "Der Hund rannte schnell, oder?",
                "one substitution with punctuation")
    add_strings("Es gibt 1,000 Gründe.", "Es gibt 1,000 gute Gründe.", "digits")
    for i in range(12):
        ref_s = ' '.join(synth_sentence(rng) for _ in range(rng.randint(1, 3)))
        hyp_s = ' '.join(perturb(rng, ref_s.split()))
        add_strings(hyp_s, ref_s, f"synthetic string pair {i}")

    return {"token_cases": token_cases, "corpus": corpus, "string_cases": string_cases}


def l2(v):
    return math.sqrt(sum(x * x for x in v))


def normalize(v):
    n = l2(v)
    return [x / n for x in v]


def mean_vectors(vectors, do_normalize=True):
    vecs = [normalize(v) if do_normalize else list(v) for v in vectors]
    dim = len(vecs[0])
    return [sum(v[i] for v in vecs) / len(vecs) for i in range(dim)]


def cosine(a, b):
    return max(-1.0, min(1.0, sum(x * y for x, y in zip(a, b)) / (l2(a) * l2(b))))


def make_embed_cases():
    cases = []

    def add(a_vectors, b_vectors, note, do_normalize=True):
        ma = mean_vectors(a_vectors, do_normalize)
        mb = mean_vectors(b_vectors, do_normalize)
        cases.append({
            "note": note, "normalize": do_normalize,
            "a_vectors": a_vectors, "b_vectors": b_vectors,
            "mean_a": ma, "mean_b": mb, "cosine": cosine(ma, mb),
        })

    add([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]], [[1.0, 0.0]], "thirds mean vs unit x")
    add([[1.0, 0.0]], [[0.0, 1.0]], "orthogonal singletons")
    add([[2.0, 0.0], [2.0, 0.0]], [[5.0, 0.0]], "equal directions, different norms")
    add([[1.0, 1.0]], [[1.0, 0.0]], "45 degrees")
    add([[3.0, 4.0], [6.0, 8.0]], [[4.0, 3.0]], "parallel sentence vectors")
    rng = random.Random(2024)
    for i in range(8):
        dim = rng.choice([3, 5, 8])
        a = [[rng.uniform(-2, 2) for _ in range(dim)] for _ in range(rng.randint(1, 5))]
        b = [[rng.uniform(-2, 2) for _ in range(dim)] for _ in range(rng.randint(1, 5))]
        add(a, b, f"random case {i}")
        add(a, b, f"random case {i} unnormalized", do_normalize=False)
    return cases


def main():
    os.makedirs(OUT, exist_ok=True)

    def dump(name, obj):
        with open(os.path.join(OUT, name), "w") as f:
            json.dump(obj, f, ensure_ascii=False, indent=1)
        print(f"wrote {name}")

    dump("nfc_cases.json", make_nfc_cases())
    dump("tok13a_cases.json", make_tok_cases())
    dump("bleu_cases.json", make_bleu_cases())
    dump("embed_cases.json", make_embed_cases())


if __name__ == "__main__":
    main()
