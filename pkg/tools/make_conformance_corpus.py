"""Regenerate tests/data/tokenizer_conformance.jsonl.

500 sentences covering contractions, currency, decimals, quotes, hyphens,
ellipses, and mixed casing, each stored with its frozen tokenization. The
frozen file is the regression contract for the tokenizer rule set; rerun this
only when the rules deliberately change.
"""

import itertools
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from privtext.corpus import tokenize  # noqa: E402

SUBJECTS = [
    "I", "You", "We", "They", "He", "She", "The manager", "My neighbor",
    "Dr. Lee", "The team", "Karen", "David", "A customer", "The waiter",
]
VERBS = [
    "ordered", "reviewed", "wrote", "sent", "canceled", "loved", "hated",
    "returned", "recommended", "bought", "tried", "finished",
]
OBJECTS = [
    "the el cheapo oil change", "a b-day cake", "two-factor codes",
    "the quarterly report", "an overpriced salad", "the new phone",
    "my favorite so-called classic", "a 5-star meal", "the onboarding doc",
    "three espresso shots", "the Wi-Fi setup", "an old laptop",
]
TAILS = [
    "over my lunch break.", "before the 9:30 meeting!", "for $40.00, taxes included.",
    "and it took 70 minutes...", "but they didn't mind.", "which wasn't ideal, right?",
    "after a 2.5 mile walk.", "at Joe's place downtown.", "despite the 10% discount;",
    "and we're around this weekend.", "-- no complaints at all.", "(a few cars were ahead).",
    "because it's so hard to keep up pretenses everyday.", "though I've got class all day Saturday.",
    "costing 12,000 dollars overall.", "per the FAQ's fine print.",
]

EXTRAS = [
    "Hello, world!",
    "Wait... what?!",
    "It's 'quoted', isn't it?",
    "E.g. version 2.0.1 shipped today.",
    "Prices: $10, $20.50, and 12,000.",
    "Y'all shouldn't've worried.",
    "The 1990s weren't kind to CD-ROMs.",
    "Email me at name at domain dot com.",
    "A/B testing isn't magic -- it's statistics.",
    "He said: \"ok\".",
]


def main() -> None:
    sentences = list(EXTRAS)
    combos = itertools.cycle(itertools.product(SUBJECTS, VERBS, OBJECTS, TAILS))
    while len(sentences) < 500:
        s, v, o, t = next(combos)
        sentences.append(f"{s} {v} {o} {t}")
    out = Path(__file__).resolve().parents[1] / "tests" / "data" / "tokenizer_conformance.jsonl"
    with open(out, "w", encoding="utf-8") as fh:
        for text in sentences[:500]:
            tokens = [t.surface for t in tokenize(text)]
            fh.write(json.dumps({"text": text, "tokens": tokens}, ensure_ascii=False) + "\n")
    print(f"wrote {out} ({len(sentences[:500])} sentences)")


if __name__ == "__main__":
    main()
