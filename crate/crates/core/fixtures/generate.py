"""Regenerates the larger fixture files. Deterministic; run from this directory.

    python3 generate.py
"""

import itertools
import random

rng = random.Random(20240611)

# --- splitter fixture -------------------------------------------------------
# Every sentence containing "hai" ends with it, so the bigram (hai, to) is
# never observed and "hai" has a single continuation (the end marker). The
# other bigrams of the test sentence all occur in training.
subjects = "yeh woh kaam safar khana paani mausam kamra rasta bazaar gaana kapda shehar gaon din sawal jawab kitab ghar dost".split()
objects = "bahut zyada thoda kaafi sach mein ab bhi aaj kal phir se bilkul hamesha abhi pehle".split()
objects = [o for o in objects if o not in ("kal",)]
adjectives = "aasaan mushkil accha bura lamba chhota naya purana saaf thanda".split()

combos = list(itertools.product(subjects, objects, adjectives))
rng.shuffle(combos)
lines = [f"{s} {o} {a} hai" for s, o, a in combos[:900]]
lines += [f"{s} kaam {a} hai" for s in ("yeh", "woh") for a in adjectives]
lines += [
    "agar tum aaoge to hum kal chalenge",
    "agar woh jaayega to hum kal chalenge",
    "tum aaoge to hum kal chalenge",
    "hum kal chalenge",
    "hum kal subah chalenge",
    "agar baarish hogi to hum ghar rahenge",
]
rng.shuffle(lines)
with open("split_corpus.txt", "w") as f:
    f.write("\n".join(lines) + "\n")

# --- aligned training data for the toy voice --------------------------------
# Phones sil, a, k, m. Durations and 2-d features depend on the phone and its
# right neighbour, plus a small deterministic jitter.
words = ["kama", "maka", "akka", "mama", "kaka", "amma", "kamak", "makka", "aam", "kaam", "mak", "kam"]
g2p = [("kk", ["k"]), ("aa", ["a"]), ("mm", ["m"]), ("a", ["a"]), ("k", ["k"]), ("m", ["m"])]


def to_phones(word):
    out, i = [], 0
    while i < len(word):
        for g, p in g2p:
            if word.startswith(g, i):
                out += p
                i += len(g)
                break
        else:
            raise ValueError(word)
    return out


base_dur = {"sil": 10, "a": 6, "k": 4, "m": 5}
base_feat = {"sil": (0.0, 0.0), "a": (1.0, 0.5), "k": (-1.0, 0.2), "m": (0.3, -0.8)}
nasal_shift = {"a": (0.2, -0.3), "k": (0.0, 0.0), "m": (0.1, 0.1), "sil": (0.0, 0.0)}

out = []
for u in range(48):
    n = rng.randint(1, 4)
    utt_words = [rng.choice(words) for _ in range(n)]
    phones = ["sil"] + sum((to_phones(w) for w in utt_words), []) + ["sil"]
    out.append(f"# utt{u:03d}")
    for i, p in enumerate(phones):
        at = lambda j: phones[j] if 0 <= j < len(phones) else "sil"
        label = f"{at(i-2)}^{at(i-1)}-{p}+{at(i+1)}={at(i+2)}"
        dur = base_dur[p] + (2 if at(i + 1) == "m" else 0) + rng.choice([-1, 0, 0, 1])
        dur = max(1, dur)
        shift = nasal_shift[p] if at(i + 1) == "m" else (0.0, 0.0)
        frames = []
        for _ in range(dur):
            f0 = base_feat[p][0] + shift[0] + rng.uniform(-0.05, 0.05)
            f1 = base_feat[p][1] + shift[1] + rng.uniform(-0.05, 0.05)
            frames.append(f"{f0:.4f},{f1:.4f}")
        out.append(f"{label}\t{';'.join(frames)}")
with open("toy_align.txt", "w") as f:
    f.write("\n".join(out) + "\n")

# --- shuffled counterparts of the structured LM fixture -----------------------
# One word-order shuffle per line of lm_tts.txt, never the identity.
with open("lm_tts.txt") as f:
    structured = [line.split() for line in f if line.strip()]
shuffled = []
for words in structured:
    perm = list(words)
    while perm == words:
        rng.shuffle(perm)
    shuffled.append(" ".join(perm))
with open("lm_shuffled.txt", "w") as f:
    f.write("\n".join(shuffled) + "\n")

# --- listening-test ratings ---------------------------------------------------
rr = random.Random(7)
base = {"gt": (4.6, 4.8, 0.98), "baseline": (3.3, 3.9, 0.85), "augmented": (3.9, 4.4, 0.93)}
rows = ["listener,item,system,quality,intelligibility,comprehension"]
for name, (q, s, c) in base.items():
    for l in range(1, 4):
        for i in range(1, 5):
            qq = min(5, max(1, round(q + rr.uniform(-0.8, 0.8))))
            ss = min(5, max(1, round(s + rr.uniform(-0.8, 0.8))))
            cc = "yes" if rr.random() < c else "no"
            rows.append(f"L{l},item{i},{name},{qq},{ss},{cc}")
with open("toy_ratings.csv", "w") as f:
    f.write("\n".join(rows) + "\n")
