#!/usr/bin/env python3
"""Generate the bundled synthetic corpus.

Writes corpus.jsonl (30 essays: 6 topics x 5 proficiency levels, with
corrected text), predictions.jsonl (noisy holistic predictions) and
embeddings.txt (16-dimensional vectors with topic structure).

Holistic labels are whole points 2..6 so that per-aspect bands derived from
them carry no ties or clamping.
"""

import hashlib
import json
import random
import re
from pathlib import Path

OUT = Path(__file__).resolve().parent
SEED = 20240611
DIM = 16

TOPICS = {
    "town": dict(
        nouns=["town", "park", "river", "street", "market", "library", "bridge", "neighbour", "square", "museum"],
        adjs=["quiet", "busy", "old", "green", "friendly", "crowded", "historic", "peaceful"],
        verbs=["walk", "visit", "explore", "meet", "shop"],
        abstract=["community", "tradition", "architecture", "infrastructure", "heritage"],
    ),
    "holiday": dict(
        nouns=["beach", "hotel", "trip", "mountain", "island", "suitcase", "ticket", "camera", "village", "lake"],
        adjs=["sunny", "relaxing", "expensive", "beautiful", "exciting", "exotic", "memorable", "remote"],
        verbs=["travel", "swim", "relax", "photograph", "discover"],
        abstract=["adventure", "hospitality", "itinerary", "scenery", "curiosity"],
    ),
    "work": dict(
        nouns=["office", "colleague", "manager", "meeting", "salary", "computer", "project", "customer", "team", "deadline"],
        adjs=["tired", "busy", "professional", "demanding", "rewarding", "flexible", "stressful", "efficient"],
        verbs=["work", "manage", "organise", "negotiate", "earn"],
        abstract=["responsibility", "productivity", "motivation", "collaboration", "career"],
    ),
    "technology": dict(
        nouns=["phone", "internet", "computer", "screen", "app", "message", "website", "robot", "battery", "network"],
        adjs=["useful", "fast", "modern", "digital", "reliable", "addictive", "innovative", "sophisticated"],
        verbs=["use", "download", "connect", "chat", "program"],
        abstract=["communication", "privacy", "automation", "innovation", "dependence"],
    ),
    "environment": dict(
        nouns=["tree", "forest", "plastic", "river", "climate", "energy", "recycling", "animal", "pollution", "ocean"],
        adjs=["clean", "dirty", "dangerous", "natural", "renewable", "fragile", "sustainable", "alarming"],
        verbs=["recycle", "protect", "plant", "reduce", "save"],
        abstract=["biodiversity", "conservation", "sustainability", "responsibility", "consumption"],
    ),
    "education": dict(
        nouns=["school", "teacher", "student", "lesson", "exam", "homework", "classroom", "university", "subject", "book"],
        adjs=["difficult", "interesting", "boring", "important", "strict", "creative", "challenging", "rigorous"],
        verbs=["study", "learn", "teach", "read", "practise"],
        abstract=["knowledge", "curriculum", "discipline", "assessment", "literacy"],
    ),
}

# (correct form, learner form); an empty learner form deletes the word
ERRORS = [
    ("is", "are"), ("has", "have"), ("goes", "go"), ("likes", "like"),
    ("because", "becouse"), ("the", ""), ("in", "on"), ("their", "there"),
    ("people", "peoples"), ("very", ""), ("a", ""), ("was", "were"),
    ("different", "diferent"), ("which", "who"), ("much", "many"),
]
ERROR_COUNT = {2: 4, 3: 3, 4: 2, 5: 1, 6: 0}


def a(word):
    return ("an " if word[0] in "aeiou" else "a ") + word


def sentence_bank(level, t, rng):
    n, adj, v, ab = t["nouns"], t["adjs"], t["verbs"], t["abstract"]
    pick = rng.choice
    if level == 2:
        return [
            f"I like the {pick(n)}.",
            f"My {pick(n)} is very {pick(adj)}.",
            f"There is {a(pick(n))} in my town.",
            f"I {pick(v)} every day.",
            f"It is {pick(adj)} and {pick(adj)}.",
            f"My friend likes the {pick(n)} too.",
            f"We {pick(v)} on Sunday.",
            f"The {pick(n)} is big.",
        ]
    if level == 3:
        return [
            f"I usually {pick(v)} with my friends because it is {pick(adj)}.",
            f"Last year we went to {a(pick(n))} and it was very {pick(adj)}.",
            f"In my opinion the {pick(n)} is more {pick(adj)} than the {pick(n)}.",
            f"My family likes the {pick(n)}, but I prefer the {pick(n)}.",
            f"Many people {pick(v)} in the evening, so the {pick(n)} is often {pick(adj)}.",
            f"I think it is important to {pick(v)} every week.",
            f"The {pick(n)} has changed a lot in the last few years.",
        ]
    if level == 4:
        return [
            f"Although the {pick(n)} can be {pick(adj)}, most people enjoy it.",
            f"However, I have noticed that the {pick(n)} is becoming more {pick(adj)}.",
            f"If you want to {pick(v)}, you should probably consider the {pick(ab)} first.",
            f"Some people believe that {pick(ab)} is the main problem, while others disagree.",
            f"In my experience, the {pick(n)} and the {pick(n)} are equally {pick(adj)}.",
            f"It was {pick(adj)} when we decided to {pick(v)} near the {pick(n)}.",
            f"This is the reason why {pick(ab)} matters to many different people.",
        ]
    if level == 5:
        return [
            f"Nevertheless, one could argue that {pick(ab)} is rather more {pick(adj)} than it first appears.",
            f"Consequently, the {pick(n)} has become a symbol of {pick(ab)} for an entire generation.",
            f"Whereas previous generations would {pick(v)} without hesitation, we tend to question the {pick(ab)} involved.",
            f"It is certainly true that the {pick(n)} offers a {pick(adj)} alternative, although its {pick(ab)} remains uncertain.",
            f"Perhaps the most {pick(adj)} aspect of this debate is the way {pick(ab)} shapes our everyday decisions.",
            f"Those who {pick(v)} regularly report a considerably {pick(adj)} attitude towards {pick(ab)}.",
        ]
    return [
        f"Notwithstanding the {pick(adj)} objections that are frequently raised, the case for {pick(ab)} appears overwhelmingly persuasive.",
        f"What is seldom acknowledged, however, is that {pick(ab)} and {pick(ab)} are inextricably intertwined.",
        f"Insofar as the {pick(n)} embodies a particular vision of {pick(ab)}, it inevitably provokes considerable controversy.",
        f"One might reasonably contend that our reluctance to {pick(v)} reflects a deeper ambivalence about {pick(ab)}.",
        f"Arguably, the {pick(adj)} character of the {pick(n)} conceals a remarkably sophisticated understanding of {pick(ab)}.",
        f"Consequently, any serious evaluation must weigh the ostensibly {pick(adj)} benefits against their long-term implications.",
    ]


SHAPE = {2: (2, 3), 3: (2, 4), 4: (3, 4), 5: (3, 5), 6: (3, 5)}


def compose(level, topic, rng):
    lo, hi = SHAPE[level]
    paragraphs = []
    for _ in range(lo + (level % 2)):
        bank = sentence_bank(level, TOPICS[topic], rng)
        rng.shuffle(bank)
        paragraphs.append(" ".join(bank[: rng.randint(lo, hi)]))
    return "\n\n".join(paragraphs)


def corrupt(text, count, rng):
    for _ in range(count):
        options = [(m, bad) for good, bad in ERRORS for m in re.finditer(rf"\b{good}\b", text)]
        if not options:
            break
        m, bad = rng.choice(options)
        start, end = m.span()
        if bad:
            text = text[:start] + bad + text[end:]
        else:
            end += 1 if end < len(text) and text[end] == " " else 0
            text = text[:start] + text[end:]
    return text


LABELS = {2: "A2", 3: "B1", 4: "B2", 5: "C1", 6: "C2"}


def main():
    rng = random.Random(SEED)
    essays = []
    predictions = []
    n = 0
    for topic in TOPICS:
        for level in range(2, 7):
            n += 1
            corrected = compose(level, topic, rng)
            text = corrupt(corrected, ERROR_COUNT[level], rng)
            row = {"id": f"syn-{n:02d}", "text": text, "corrected_text": corrected}
            if n % 3 == 0:
                row["cefr"] = LABELS[level]
            else:
                row["score"] = float(level)
            row["source"] = "SYNTHETIC"
            essays.append(row)
            pred = min(6.5, max(1.0, level + rng.gauss(0.0, 0.45)))
            predictions.append({"id": row["id"], "score": round(pred, 3)})
    # essays interleave levels by topic; shuffle so ids carry no ordering
    order = list(range(len(essays)))
    rng.shuffle(order)
    with open(OUT / "corpus.jsonl", "w") as f:
        for i in order:
            f.write(json.dumps(essays[i], ensure_ascii=False) + "\n")
    with open(OUT / "predictions.jsonl", "w") as f:
        for i in order:
            f.write(json.dumps(predictions[i]) + "\n")

    vocab = set()
    for e in essays:
        for t in (e["text"], e["corrected_text"]):
            vocab.update(w.lower() for w in re.findall(r"[A-Za-z][A-Za-z']*", t))
    topic_of = {}
    for name, pools in TOPICS.items():
        for pool in pools.values():
            for w in pool:
                topic_of.setdefault(w, name)
    centroids = {}
    crng = random.Random(SEED + 1)
    for name in TOPICS:
        centroids[name] = [crng.gauss(0.0, 1.0) for _ in range(DIM)]
    rows = []
    for w in sorted(vocab):
        h = int.from_bytes(hashlib.sha256(w.encode()).digest()[:8], "little")
        if h % 13 == 0:
            continue  # out of vocabulary
        wrng = random.Random(h)
        noise = [wrng.gauss(0.0, 1.0) for _ in range(DIM)]
        base = centroids.get(topic_of.get(w), [0.0] * DIM)
        rows.append((w, [b * 1.5 + x for b, x in zip(base, noise)]))
    with open(OUT / "embeddings.txt", "w") as f:
        f.write(f"{len(rows)} {DIM}\n")
        for w, vec in rows:
            f.write(w + " " + " ".join(f"{x:.6f}" for x in vec) + "\n")


if __name__ == "__main__":
    main()
