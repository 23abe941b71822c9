#!/usr/bin/env python3
"""Reference implementation of the nine essay features, used to produce
expected_features.csv for the bundled synthetic corpus.

Written independently of the Rust code from the feature definitions; the edit
count uses an explicit two-phase search (Levenshtein table, then the fewest
edit runs among cost-optimal alignments).
"""

import csv
import json
import re
import sys
from pathlib import Path

import numpy as np

HERE = Path(__file__).resolve().parent
DATA = HERE.parent.parent / "crates" / "core" / "data"


def word_list(name):
    out = []
    for line in (DATA / name).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(line)
    return out


EASY = {w.lower() for w in word_list("easy_words.txt")}
QUALIFIERS = {w.lower() for w in word_list("qualifiers.txt")}
FUNCTION = {w.lower() for w in word_list("function_words.txt")}
ABBREV = {w.lower().rstrip(".") for w in word_list("abbreviations.txt")}
LEXICON = {}
for line in word_list("pos_lexicon.txt"):
    word, tag = line.split()
    LEXICON.setdefault(word.lower(), tag)


# ---------------------------------------------------------------- tokens
def tokenize(text):
    """(surface, kind) pairs; kind in WORD / NUMBER / PUNCT."""
    out, i, n = [], 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        j = i + 1
        if c.isalpha():
            while j < n and (text[j].isalpha() or text[j] in "'’"):
                j += 1
            kind = "WORD"
        elif c.isdigit():
            while j < n and text[j].isdigit():
                j += 1
            kind = "NUMBER"
        else:
            while j < n and not (text[j].isspace() or text[j].isalpha() or text[j].isdigit()):
                j += 1
            kind = "PUNCT"
        out.append((text[i:j], kind))
        i = j
    return out


def words(tokens):
    return [s for s, k in tokens if k in ("WORD", "NUMBER")]


def word_types(tokens):
    return {s.lower() for s, k in tokens if k == "WORD"}


# ------------------------------------------------------------- sentences
def sentence_count(text):
    if not text.strip():
        return 0
    count, i, n, last = 0, 0, len(text), 0
    while i < n:
        if text[i] not in ".!?":
            i += 1
            continue
        run = i
        while i < n and text[i] in ".!?":
            i += 1
        single_period = i - run == 1 and text[run] == "."
        while i < n and text[i] in "\"')]\u201d\u2019":
            i += 1
        k = i
        while k < n and text[k].isspace():
            k += 1
        at_end = k == n
        capital = k > i and not at_end and text[k].isupper()
        if not (at_end or capital):
            continue
        if single_period and not at_end:
            w = run
            while w > 0 and (text[w - 1].isalpha() or text[w - 1] == "."):
                w -= 1
            if text[w:run] and text[w:run].lower() in ABBREV:
                continue
        count += 1
        last = k
        i = k
    # a trailing fragment without a terminator is the last sentence
    return count + (1 if last < n else 0)


def paragraphs(text):
    return [p.strip() for p in re.split(r"\n(?:[^\S\n]*\n)+", text) if p.strip()]


# ------------------------------------------------------------- syllables
def syllables(word):
    letters = [c for c in word.lower() if c.isalpha()]
    vowels = "aeiouy"
    groups, prev = 0, False
    for c in letters:
        v = c in vowels
        if v and not prev:
            groups += 1
        prev = v
    consonant_le = len(letters) >= 3 and letters[-2:] == ["l", "e"] and letters[-3] not in vowels
    if letters and letters[-1] == "e" and not consonant_le and groups > 1:
        groups -= 1
    return max(groups, 1)


# ------------------------------------------------------------------- POS
def tag(tokens):
    tags, aux = [], []
    for i, (s, k) in enumerate(tokens):
        if k == "PUNCT":
            tags.append("PUNCT"); aux.append(False); continue
        if k == "NUMBER":
            tags.append("NUM"); aux.append(False); continue
        w = s.lower()
        if w in LEXICON:
            t = LEXICON[w]
            tags.append("VERB" if t == "AUX" else t)
            aux.append(t == "AUX")
            continue
        t = "NOUN"
        if len(w) >= 4 and w.endswith("ly"):
            t = "ADV"
        elif len(w) >= 5 and w.endswith(("ous", "ful", "ive", "al")):
            t = "ADJ"
        elif len(w) >= 4 and w.endswith(("ing", "ed")):
            j = i - 1
            while j >= 0 and tags[j] in ("ADV", "PART"):
                j -= 1
            if j >= 0 and aux[j]:
                t = "VERB"
        tags.append(t); aux.append(False)
    return tags


def noun_chunks(tokens):
    tags = tag(tokens)
    chunks, i = set(), 0
    while i < len(tags):
        j = i
        if tags[j] == "DET":
            j += 1
        while j < len(tags) and tags[j] in ("ADJ", "NUM"):
            j += 1
        k = j
        while k < len(tags) and tags[k] == "NOUN":
            k += 1
        if k > j:
            chunks.add(" ".join(s.lower() for s, _ in tokens[i:k]))
            i = k
        else:
            i += 1
    return len(chunks)


# ----------------------------------------------------------------- edits
def edit_count(a, b):
    a = [s.lower() for s, _ in a]
    b = [s.lower() for s, _ in b]
    n, m = len(a), len(b)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        d[i][0] = i
    for j in range(m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] != b[j - 1]))
    # fewest runs over cost-tight steps; state = (i, j, last step was an edit)
    INF = float("inf")
    runs = [[[INF, INF] for _ in range(m + 1)] for _ in range(n + 1)]
    runs[0][0][0] = 0
    for i in range(n + 1):
        for j in range(m + 1):
            for e in (0, 1):
                r = runs[i][j][e]
                if r == INF:
                    continue
                steps = []
                if i < n and j < m:
                    same = a[i] == b[j]
                    if d[i + 1][j + 1] == d[i][j] + (0 if same else 1):
                        steps.append((i + 1, j + 1, not same))
                if i < n and d[i + 1][j] == d[i][j] + 1:
                    steps.append((i + 1, j, True))
                if j < m and d[i][j + 1] == d[i][j] + 1:
                    steps.append((i, j + 1, True))
                for ni, nj, edit in steps:
                    nr = r + (1 if edit and not e else 0)
                    slot = 1 if edit else 0
                    if nr < runs[ni][nj][slot]:
                        runs[ni][nj][slot] = nr
    return min(runs[n][m])


# ------------------------------------------------------------ embeddings
def load_embeddings(path):
    table, dim = {}, None
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f):
            parts = line.split()
            if lineno == 0 and len(parts) == 2 and all(p.isdigit() for p in parts):
                dim = int(parts[1])
                continue
            vec = np.array([np.float32(x) for x in parts[1:]], dtype=np.float32)
            if not vec.any():
                continue
            table.setdefault(parts[0], vec)
    return table


def similarity(text, table):
    vecs = []
    for p in paragraphs(text):
        hits = [table[s.lower()].astype(np.float64) for s, k in tokenize(p) if k == "WORD" and s.lower() in table]
        if hits:
            total = np.zeros_like(hits[0])
            for h in hits:
                total = total + h
            vecs.append(total / len(hits))
    if len(vecs) < 2:
        return None
    sims = [float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v))) for u, v in zip(vecs, vecs[1:])]
    return sum(sims) / len(sims)


# --------------------------------------------------------------- features
def features(essay, table):
    toks = tokenize(essay["text"])
    ws = words(toks)
    types = word_types(toks)
    sents = sentence_count(essay["text"])
    corrected = essay.get("corrected_text")
    gram = edit_count(toks, tokenize(corrected)) / len(ws) if corrected is not None else None
    difficult = {s.lower() for s, k in toks if k == "WORD" and s.lower() not in EASY and syllables(s) >= 2}
    syl = sum(syllables(s) if k == "WORD" else 1 for s, k in toks if k in ("WORD", "NUMBER"))
    fk = 0.39 * (len(ws) / sents) + 11.8 * (syl / len(ws)) - 15.59
    return [
        gram,
        len(difficult),
        len(types),
        sum(1 for t in types if t not in FUNCTION) / len(types),
        noun_chunks(toks),
        sum(1 for t in types if t in QUALIFIERS),
        fk,
        similarity(essay["text"], table),
        len(ws) / sents if sents else None,
    ]


HEADER = ["id", "gram_rate", "difficult_words", "unique_words", "lexical_density_types", "unique_noun_chunks",
          "unique_qualifiers", "flesch_kincaid", "paragraph_similarity", "avg_sentence_length"]


def main():
    corpus = sys.argv[1] if len(sys.argv) > 1 else HERE / "corpus.jsonl"
    emb = sys.argv[2] if len(sys.argv) > 2 else HERE / "embeddings.txt"
    out = sys.argv[3] if len(sys.argv) > 3 else HERE / "expected_features.csv"
    table = load_embeddings(emb)
    with open(corpus, encoding="utf-8") as f, open(out, "w", newline="") as g:
        w = csv.writer(g, lineterminator="\n")
        w.writerow(HEADER)
        for line in f:
            if not line.strip():
                continue
            essay = json.loads(line)
            w.writerow([essay["id"]] + ["" if v is None else repr(v) for v in features(essay, table)])


if __name__ == "__main__":
    main()
