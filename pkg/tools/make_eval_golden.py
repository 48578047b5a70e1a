"""Regenerate the committed evaluate golden bundle (tests/data/eval_golden/).

Inputs (corpus, vectors, scorer fixture, frozen config values) and the
expected report are committed together; the test replays sanitize+evaluate
from the inputs and compares the produced report numerically.
"""

import json
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from privtext.cli import main  # noqa: E402
from privtext.corpus import load_corpus  # noqa: E402

GOLDEN = ROOT / "tests" / "data" / "eval_golden"
VOCAB = [f"tok{i}" for i in range(24)]


def write_inputs() -> None:
    GOLDEN.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20240808)
    with open(GOLDEN / "corpus.jsonl", "w", encoding="utf-8") as fh:
        for i in range(24):
            fh.write(
                json.dumps(
                    {
                        "id": f"doc{i}",
                        "author": f"a{i % 3}",
                        "text": " ".join(rng.choice(VOCAB, size=10)),
                        "label": "pos" if i % 2 else "neg",
                    }
                )
                + "\n"
            )
    with open(GOLDEN / "vectors.txt", "w", encoding="utf-8") as fh:
        for w in VOCAB:
            vec = rng.standard_normal(4)
            fh.write(w + " " + " ".join(f"{x:.6f}" for x in vec) + "\n")


def config_dict(out_dir: Path) -> dict:
    return {
        "dataset_name": "golden",
        "corpus": str(GOLDEN / "corpus.jsonl"),
        "embeddings": str(GOLDEN / "vectors.txt"),
        "embedding_dim": 4,
        "mechanism": "santext",
        "mechanism_params": {"candidate_k": 4},
        "base_eps": [2.0],
        "mode": "bounded",
        "seed": 99,
        "output_dir": str(out_dir),
        "workers": 1,
        "holdout_pairs": 3,
        "evaluation": {
            "semantic_metrics": True,
            "test_fraction": 0.25,
            "split_seed": 7,
            "embeddings_fixture": str(GOLDEN / "fixture.json"),
        },
    }


def hash_embedding(text: str, dim: int = 6) -> list[float]:
    import hashlib

    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=dim * 2).digest()
    vec = np.frombuffer(digest, dtype=np.uint16).astype(np.float64)
    return [float(x) for x in vec / 65535.0 + 0.01]


def main_() -> None:
    write_inputs()
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "run"
        cfg_path = Path(tmp) / "config.json"
        cfg_path.write_text(json.dumps(config_dict(out)))
        assert main(["sanitize", "--config", str(cfg_path)]) == 0
        clean = load_corpus(GOLDEN / "corpus.jsonl")
        sanitized = load_corpus(out / "sanitized_eps2.jsonl")
        texts = sorted({d.text for d in clean.documents} | {d.text for d in sanitized.documents})
        fixture = {
            "model_ids": {"embed": "fixture-embed", "perplexity": "fixture-ppl"},
            "embeddings": {t: hash_embedding(t) for t in texts},
            "perplexities": {t: 10.0 + (len(t) % 7) for t in texts},
        }
        (GOLDEN / "fixture.json").write_text(json.dumps(fixture, sort_keys=True))
        assert main(["evaluate", "--config", str(cfg_path)]) == 0
        shutil.copy(out / "report.csv", GOLDEN / "report_golden.csv")
    print(f"wrote {GOLDEN}/report_golden.csv:")
    print((GOLDEN / "report_golden.csv").read_text())


if __name__ == "__main__":
    main_()
