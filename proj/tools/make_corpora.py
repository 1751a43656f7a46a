"""Writes the two synthetic text corpora used by the text mixture task.

Corpus A reads like market news, corpus B like ship log entries. Both are
generated from small seeded grammars so the files are reproducible.
"""
import argparse
import random
from pathlib import Path

NEWS = {
    "company": ["Northwind", "Acme Holdings", "Globex", "Initech", "Umbrella Group", "Stark Metals",
                "Wayne Freight", "Tyrell Energy", "Cyberdyne", "Soylent Foods"],
    "verb": ["reported", "announced", "forecast", "posted", "confirmed", "disclosed"],
    "noun": ["quarterly earnings", "net profit", "revenue growth", "a share buyback",
             "operating margins", "a dividend increase", "lower guidance", "record sales"],
    "market": ["shares", "bond yields", "the index", "futures", "the currency", "crude prices"],
    "move": ["rose", "fell", "climbed", "slipped", "edged higher", "dropped sharply"],
    "analyst": ["analysts said", "traders noted", "economists expected", "investors feared"],
    "topic": ["inflation", "interest rates", "demand in Asia", "supply costs", "the central bank",
              "consumer spending", "trade talks"],
}

LOG = {
    "time": ["dawn", "first watch", "midday", "the second bell", "dusk", "the middle watch"],
    "wind": ["a stiff westerly", "light airs from the north", "a gale from the southeast",
             "a steady breeze", "squalls and rain", "no wind at all"],
    "sail": ["reefed the mainsail", "set the topsails", "struck the jib", "hove to",
             "ran before the wind", "beat to windward"],
    "crew": ["the bosun", "young Harker", "the cook", "the mate", "two hands", "the lookout"],
    "task": ["mended the rigging", "pumped the bilge", "scrubbed the deck", "sounded the depth",
             "stowed the casks", "took a sighting"],
    "sight": ["a low island", "whales to port", "a distant sail", "floating kelp", "seabirds",
              "a reef to starboard"],
}


def news_sentence(r):
    c = r.choice
    forms = [
        lambda: f"{c(NEWS['company'])} {c(NEWS['verb'])} {c(NEWS['noun'])} on {c(['Monday', 'Tuesday', 'Wednesday', 'Thursday', 'Friday'])}.",
        lambda: f"{c(NEWS['market']).capitalize()} {c(NEWS['move'])} {r.randint(1, 9)}.{r.randint(0, 9)} percent as {c(NEWS['analyst'])} {c(NEWS['topic'])} would weigh on results.",
        lambda: f"Concerns over {c(NEWS['topic'])} kept {c(NEWS['market'])} in check, {c(NEWS['analyst'])}.",
        lambda: f"{c(NEWS['company'])} said {c(NEWS['noun'])} reflected {c(NEWS['topic'])}.",
    ]
    return c(forms)()


def log_sentence(r):
    c = r.choice
    forms = [
        lambda: f"At {c(LOG['time'])} we had {c(LOG['wind'])} and {c(LOG['sail'])}.",
        lambda: f"{c(LOG['crew']).capitalize()} {c(LOG['task'])} while we {c(LOG['sail'])}.",
        lambda: f"Sighted {c(LOG['sight'])} at {c(LOG['time'])}; {c(LOG['crew'])} {c(LOG['task'])}.",
        lambda: f"Course held at {r.randint(0, 359)} degrees with {c(LOG['wind'])}.",
    ]
    return c(forms)()


def build(sentence, seed, size):
    r = random.Random(seed)
    out = []
    total = 0
    while total < size:
        para = " ".join(sentence(r) for _ in range(r.randint(3, 6))) + "\n"
        out.append(para)
        total += len(para)
    return "".join(out)[:size]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data")
    ap.add_argument("--size", type=int, default=100_000)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "corpus_a.txt").write_text(build(news_sentence, 1, args.size), encoding="ascii")
    (args.out / "corpus_b.txt").write_text(build(log_sentence, 2, args.size), encoding="ascii")


if __name__ == "__main__":
    main()
