"""Synthetic offline projects for pipeline and CLI tests."""

from __future__ import annotations

import json
import random
from pathlib import Path

from slr_extract.extraction import DataEntry
from slr_extract.retrieval import fnv1a_64, query_text

DATA_TYPES = ["Tabular", "Time-series", "Images", "Text", "Video", "Audio", "Multi-modal"]

ENTRIES = [
    DataEntry.from_labels("data_type", "Which data type is used in this study?", DATA_TYPES),
    DataEntry.from_labels(
        "setting",
        "In which care setting was the application evaluated?",
        ["Hospital", "Primary-care", "Home", "Community"],
    ),
    DataEntry.from_labels(
        "model_family",
        "Which family of prediction model was applied?",
        ["Regression", "Tree-ensemble", "Neural-network", "Bayesian"],
    ),
]

# Planted truth per document: entry_id -> labels.
TRUTH = {
    "p1": {"data_type": ["Tabular"], "setting": ["Hospital"], "model_family": ["Regression"]},
    "p2": {"data_type": ["Time-series"], "setting": ["Home"], "model_family": ["Neural-network"]},
    "p3": {"data_type": ["Tabular", "Text"], "setting": ["Hospital"], "model_family": ["Tree-ensemble"]},
    "p4": {"data_type": ["Images"], "setting": ["Community"], "model_family": ["Bayesian"]},
    "p5": {"data_type": ["Audio"], "setting": ["Primary-care"], "model_family": ["Neural-network", "Regression"]},
}

SENTENCES = {
    "data_type": "The study uses {} data.",
    "setting": "It was evaluated in a {} care setting.",
    "model_family": "A {} prediction model was applied.",
}


def filler_vocabulary(dim: int = 256, size: int = 40, seed: int = 7) -> list[str]:
    """Pseudo-words whose hash buckets avoid every query and sentinel token."""
    forbidden = set()
    texts = [query_text(e.question, e.labels) for e in ENTRIES] + list(SENTENCES.values())
    for text in texts:
        for tok in text.split():
            forbidden.add(fnv1a_64(tok.lower()) % dim)
    rng = random.Random(seed)
    words: list[str] = []
    while len(words) < size:
        w = "".join(rng.choice("bcdfghjklmnpqrstvwxz") + rng.choice("aeiou") for _ in range(3))
        if fnv1a_64(w) % dim not in forbidden and w not in words:
            words.append(w)
    return words


def make_document(doc_id: str, n_tokens: int = 600, seed: int = 0) -> str:
    rng = random.Random(f"{doc_id}-{seed}")
    vocab = filler_vocabulary()
    blocks = [" ".join(rng.choice(vocab) for _ in range(n_tokens // 4)) for _ in range(4)]
    parts = []
    for block, entry_id in zip(blocks, ["data_type", "setting", "model_family", None]):
        parts.append(block)
        if entry_id is not None:
            labels = " and ".join(TRUTH[doc_id][entry_id])
            parts.append(SENTENCES[entry_id].format(labels))
    return "\n\n".join(parts) + "\n"


def write_project(root: Path, *, chunk_size: int = 120, overlap: int = 60, models=("mock-a",), **extra) -> Path:
    """Corpus, entries, annotations and run config under ``root``; returns the config path."""
    root.mkdir(parents=True, exist_ok=True)
    corpus = root / "corpus"
    corpus.mkdir(exist_ok=True)
    for doc_id in TRUTH:
        (corpus / f"{doc_id}.txt").write_text(make_document(doc_id), encoding="utf-8")
    (root / "entries.json").write_text(json.dumps([e.to_dict() for e in ENTRIES], indent=2), encoding="utf-8")
    with (root / "annotations.jsonl").open("w", encoding="utf-8") as fh:
        for rater in ("researcher_1", "researcher_2"):
            for doc_id, answers in TRUTH.items():
                for entry_id, labels in answers.items():
                    row = {"rater": rater, "doc_id": doc_id, "entry_id": entry_id, "answers": labels}
                    fh.write(json.dumps(row) + "\n")
    config = {
        "corpus": "corpus",
        "entries": "entries.json",
        "models": list(models),
        "embedding": {"provider": "hash", "dim": 256, "max_input_tokens": 512},
        "chunking": {"chunk_size": chunk_size, "overlap": overlap},
        "k": 3,
        "cache_dir": "cache",
        "output": "out/results.jsonl",
        "parallelism": 4,
        "api_key_env": "SLR_EXTRACT_TEST_KEY",
        **extra,
    }
    path = root / "run.json"
    path.write_text(json.dumps(config, indent=2), encoding="utf-8")
    return path


def read_jsonl(path: Path) -> list[dict]:
    return [json.loads(line) for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]
