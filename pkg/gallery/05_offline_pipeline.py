"""
A complete offline run
======================

Build a tiny project on disk, run extraction with the deterministic offline
stack (hash embeddings and a rule-based mock model), and evaluate the
results against two raters. Nothing here touches the network.
"""

# %%
import csv
import json
import tempfile
from pathlib import Path

from slr_extract.cli import load_run_config, run_evaluate, run_extract

root = Path(tempfile.mkdtemp(prefix="slr-extract-"))
(root / "corpus").mkdir()
papers = {
    "smith2021": ("Tabular", "Hospital"),
    "lee2022": ("Time-series", "Home"),
    "garcia2023": ("Images", "Hospital"),
}
for doc_id, (data_type, setting) in papers.items():
    (root / "corpus" / f"{doc_id}.txt").write_text(
        f"Background on digital health. The study uses {data_type} data. "
        f"Recruitment details follow. It was evaluated in a {setting} setting. Discussion and limitations.",
        encoding="utf-8",
    )

entries = [
    {"entry_id": "data_type", "question": "Which data type is used?", "options": ["Tabular", "Time-series", "Images", "Text"]},
    {"entry_id": "setting", "question": "Where was the application evaluated?", "options": ["Hospital", "Home", "Community"]},
]
(root / "entries.json").write_text(json.dumps(entries), encoding="utf-8")

with (root / "annotations.jsonl").open("w", encoding="utf-8") as fh:
    for rater in ("R1", "R2"):
        for doc_id, answers in papers.items():
            for entry, answer in zip(("data_type", "setting"), answers):
                fh.write(json.dumps({"rater": rater, "doc_id": doc_id, "entry_id": entry, "answers": [answer]}) + "\n")

config = {
    "corpus": "corpus",
    "entries": "entries.json",
    "models": ["mock-model"],
    "embedding": {"provider": "hash"},
    "chunking": {"chunk_size": 12, "overlap": 4},
    "k": 3,
    "cache_dir": "cache",
    "output": "out/results.jsonl",
}
(root / "run.json").write_text(json.dumps(config, indent=2), encoding="utf-8")

# %%
# Extraction writes one JSON record per (document, entry, model).
summary = run_extract(load_run_config(root / "run.json"), offline=True)
print(summary)
for line in summary.output_path.read_text(encoding="utf-8").splitlines():
    rec = json.loads(line)
    print(rec["doc_id"], rec["entry_id"], rec["answer_ids"], rec["parse_mode"])

# %%
# A second run is served entirely from the response cache.
again = run_extract(load_run_config(root / "run.json"), offline=True)
print("cache hits:", again.cache_hits, "misses:", again.cache_misses)

# %%
# Evaluation writes a JSON report and two CSV tables.
paths = run_evaluate(summary.output_path, root / "annotations.jsonl", root / "report")
for name in ("kappa", "pr"):
    print(f"--- {paths[name].name}")
    with paths[name].open(newline="") as fh:
        for row in csv.reader(fh):
            print(row)
