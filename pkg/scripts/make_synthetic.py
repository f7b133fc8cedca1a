"""Regenerate the bundled synthetic corpus under data/synthetic/.

Two frames with disjoint content vocabularies (commerce vs. motion), each
sentence shaped "The AGENT VERB [PARTICLE] the THEME ." with the agent and
theme noun phrases highlighted. Word vectors put each frame's words in
its own 3-dimensional subspace; function words live in two extra dims.
"""

import json
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parent.parent / "data" / "synthetic"

FRAMES = {
    "Commerce_buy": {
        "agents": ["trader", "buyer", "dealer", "investor", "broker"],
        "verbs": [("bought", "buy", None), ("purchased", "purchase", None),
                  ("acquired", "acquire", None), ("bought", "buy", "out")],
        "themes": ["shares", "stocks", "bonds", "goods", "assets"],
        "dims": (0, 1, 2),
    },
    "Self_motion": {
        "agents": ["runner", "athlete", "jogger", "sprinter", "walker"],
        "verbs": [("ran", "run", None), ("sprinted", "sprint", None),
                  ("jogged", "jog", None), ("raced", "race", "off")],
        "themes": ["race", "marathon", "track", "course", "trail"],
        "dims": (3, 4, 5),
    },
}
PER_FRAME = 20
DIM = 8
OOV = {"walker"}  # left out of the vector file on purpose


def sentence(sid, frame, agent, verb, theme):
    form, lemma, particle = verb
    words = [("The", "the", "DET", 2, "det"), (agent, agent, "NOUN", 3, "nsubj"),
             (form, lemma, "VERB", 0, "root")]
    pred = [3]
    if particle:
        words.append((particle, particle, "ADP", 3, "compound:prt"))
        pred.append(4)
    n = len(words)
    words += [("the", "the", "DET", n + 2, "det"), (theme, theme, "NOUN", 3, "obj"),
              (".", ".", "PUNCT", 3, "punct")]
    return {
        "id": sid,
        "tokens": [dict(surface=s, lemma=l, upos=u, head=h, deprel=d) for s, l, u, h, d in words],
        "predicate": {"token_indices": pred, "gold_frame": frame},
        "slots": [
            {"slot_id": "a", "token_indices": [1, 2], "gold_role": "Agent"},
            {"slot_id": "t", "token_indices": [n + 1, n + 2], "gold_role": "Theme"},
        ],
    }


def main():
    rng = np.random.default_rng(7)
    corpus = []
    for f, (frame, plan) in enumerate(FRAMES.items()):
        for i in range(PER_FRAME):
            sid = f"syn{f * PER_FRAME + i + 1:03d}"
            corpus.append(sentence(sid, frame, plan["agents"][i % 5], plan["verbs"][i % 4],
                                   plan["themes"][(2 * i + i // 5) % 5]))
    # interleave the frames so input order does not give the answer away
    corpus = [s for pair in zip(corpus[:PER_FRAME], corpus[PER_FRAME:]) for s in pair]

    vectors = {}
    for plan in FRAMES.values():
        words = plan["agents"] + plan["themes"] + [v[0] for v in plan["verbs"]]
        for w in sorted(set(words) - OOV):
            v = np.zeros(DIM)
            v[list(plan["dims"])] = 1 / np.sqrt(3) + 0.1 * rng.standard_normal(3)
            vectors[w] = v
    for w in ("The", "the", ".", "out", "off"):
        v = np.zeros(DIM)
        v[6:] = rng.uniform(0.2, 1.0, 2)
        vectors[w] = v

    OUT.mkdir(parents=True, exist_ok=True)
    with open(OUT / "corpus.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for s in corpus:
            fh.write(json.dumps(s) + "\n")
    with open(OUT / "vectors.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(vectors)} {DIM}\n")
        for w in sorted(vectors):
            fh.write(w + " " + " ".join(f"{x:.6f}" for x in vectors[w]) + "\n")
    # stand-in for encoder output: one vector per sentence, frame subspace plus noise
    with open(OUT / "contextual.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for s in corpus:
            frame = s["predicate"]["gold_frame"]
            v = np.zeros(DIM)
            v[list(FRAMES[frame]["dims"])] = 1.0
            v += 0.05 * rng.standard_normal(DIM)
            fh.write(json.dumps({"id": s["id"], "vector": [round(float(x), 6) for x in v]}) + "\n")


if __name__ == "__main__":
    main()
