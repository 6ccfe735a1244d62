"""Independent reference values for the text and control metrics on the
toy corpus. Writes crates/core/tests/fixtures/toy_corpus.json.

Requires nltk (for the Snowball English stemmer used by the stem stage).
"""
import json
import math
import string
from collections import Counter
from pathlib import Path

from nltk.stem.snowball import EnglishStemmer

PAIRS = [
    ("Ok, I will go to IKEA.", "Ok, I will go to IKEA."),
    ("Sure, turning left at the next intersection.", "Sure, I will turn left at the next junction."),
    ("Stopping now.", "Ok, stopping here."),
    ("I will take you to the Shell.", "Going to the Shell gas station now."),
    ("The light is red, waiting.", "Waiting for the red light."),
    ("Changing lanes to the right.", "I am switching to the right lane."),
    ("Yes.", "No problem."),
    ("Turning around to head to KFC.", "Ok, turning around, heading to KFC."),
    ("There is a car in front of me.", "A car is stopped in front of us."),
    ("Let's go.", "Starting again, let's go."),
]

CONTROL_PRED = [1.0, 3.0, 2.5, -0.2, 4.9, 10.0]
CONTROL_GOLD = [0.0, 0.0, 2.45, 0.0, 0.0, 10.6]
THRESHOLDS = [0.1, 0.5, 1.0, 5.0]


def tok(text):
    out = []
    for word in text.lower().split():
        cur = ""
        for ch in word:
            if ch in string.punctuation:
                if cur:
                    out.append(cur)
                    cur = ""
                out.append(ch)
            else:
                cur += ch
        if cur:
            out.append(cur)
    return out


def grams(t, n):
    return Counter(tuple(t[i:i + n]) for i in range(len(t) - n + 1))


def bleu(pairs, eps=0.1):
    match = [0] * 4
    tot = [0] * 4
    c = r = 0
    for cand, ref in pairs:
        c += len(cand)
        r += len(ref)
        for n in range(1, 5):
            cg, rg = grams(cand, n), grams(ref, n)
            match[n - 1] += sum(min(v, rg[g]) for g, v in cg.items())
            tot[n - 1] += sum(cg.values())
    logs = 0.0
    for n in range(4):
        p = match[n] / tot[n] if match[n] else eps / tot[n]
        logs += math.log(p)
    bp = 1.0 if c > r else math.exp(1 - r / c)
    return bp * math.exp(logs / 4)


def lcs(a, b):
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(len(a)):
        for j in range(len(b)):
            table[i + 1][j + 1] = table[i][j] + 1 if a[i] == b[j] else max(table[i][j + 1], table[i + 1][j])
    return table[-1][-1]


def rouge(pairs, beta2=1.2):
    s = 0.0
    for cand, ref in pairs:
        l = lcs(cand, ref)
        if l:
            p, rc = l / len(cand), l / len(ref)
            s += (1 + beta2) * p * rc / (rc + beta2 * p)
    return s / len(pairs)


def cider(pairs, sigma=6.0):
    n_docs = len(pairs)
    df = [Counter() for _ in range(4)]
    for _, ref in pairs:
        for n in range(1, 5):
            for g in grams(ref, n):
                df[n - 1][g] += 1

    def vec(t, n):
        v = {}
        for g, tf in grams(t, n).items():
            v[g] = tf * (math.log(n_docs) - math.log(max(1, df[n - 1][g])))
        return v

    total = 0.0
    for cand, ref in pairs:
        score = 0.0
        delta = len(cand) - len(ref)
        for n in range(1, 5):
            vc, vr = vec(cand, n), vec(ref, n)
            nc = math.sqrt(sum(x * x for x in vc.values()))
            nr = math.sqrt(sum(x * x for x in vr.values()))
            val = sum(min(w, vr[g]) * vr[g] for g, w in vc.items() if g in vr)
            if nc and nr:
                val /= nc * nr
            score += val * math.exp(-delta * delta / (2 * sigma * sigma))
        total += score / 4 * 10
    return total / n_docs


def meteor(pairs):
    st = EnglishStemmer()
    s = 0.0
    for cand, ref in pairs:
        used = set()
        align = {}
        for stage in ("exact", "stem"):
            key = (lambda w: w) if stage == "exact" else st.stem
            for i, w in enumerate(cand):
                if i in align:
                    continue
                for j, x in enumerate(ref):
                    if j not in used and key(x) == key(w):
                        align[i] = j
                        used.add(j)
                        break
        m = len(align)
        if not m:
            continue
        chunks = 0
        for i in range(len(cand)):
            if i in align and not (i - 1 in align and align[i - 1] + 1 == align[i]):
                chunks += 1
        p, r = m / len(cand), m / len(ref)
        f = 10 * p * r / (r + 9 * p)
        s += f * (1 - 0.5 * (chunks / m) ** 3)
    return s / len(pairs)


def bertscore_onehot(pairs):
    # Cosine of one-hot vectors is 1 for equal tokens and 0 otherwise, so
    # greedy matching reduces to set membership.
    P = R = F = 0.0
    for cand, ref in pairs:
        p = sum(1 for w in cand if w in ref) / len(cand)
        r = sum(1 for w in ref if w in cand) / len(ref)
        f = 2 * p * r / (p + r) if p + r else 0.0
        P, R, F = P + p, R + r, F + f
    n = len(pairs)
    return P / n, R / n, F / n


def control():
    n = len(CONTROL_PRED)
    mse = sum((p - g) ** 2 for p, g in zip(CONTROL_PRED, CONTROL_GOLD)) / n
    acc = [sum(1 for p, g in zip(CONTROL_PRED, CONTROL_GOLD) if abs(p - g) < t) / n for t in THRESHOLDS]
    return math.sqrt(mse), acc


def main():
    pairs = [(tok(c), tok(r)) for c, r in PAIRS]
    bp, br, bf = bertscore_onehot(pairs)
    rmse, acc = control()
    doc = {
        "pairs": [{"candidate": c, "reference": r} for c, r in PAIRS],
        "control": {"pred": CONTROL_PRED, "gold": CONTROL_GOLD, "thresholds": THRESHOLDS},
        "expected": {
            "bleu4": bleu(pairs),
            "rouge_l": rouge(pairs),
            "cider_d": cider(pairs),
            "meteor_lite": meteor(pairs),
            "bertscore_p": bp,
            "bertscore_r": br,
            "bertscore_f": bf,
            "rmse": rmse,
            "accuracy": acc,
        },
    }
    out = Path(__file__).resolve().parents[1] / "crates/core/tests/fixtures/toy_corpus.json"
    out.write_text(json.dumps(doc, indent=2) + "\n")
    print(json.dumps(doc["expected"], indent=2))


if __name__ == "__main__":
    main()
