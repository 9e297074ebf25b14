"""Agreement between raters: pairwise Cohen's kappa and consensus precision/recall.

Each (doc_id, entry_id) pair is one item. For kappa, an item's category is
its whole answer set, so two raters agree on an item only when they chose
exactly the same options. Precision/recall count individual (item, option)
pairs: an LLM answer is a true positive if either researcher gave it and a
false positive if neither did; an option both researchers gave but the LLM
missed is a false negative.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, EvalError

ItemKey = tuple[str, str]


@dataclass
class AnnotationSet:
    """One rater's answers. Model sets may hold empty answers for failed items."""

    rater_id: str
    answers: dict[ItemKey, frozenset[str]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.answers = {tuple(k): frozenset(v) for k, v in self.answers.items()}

    def add(self, doc_id: str, entry_id: str, option_ids: Iterable[str]) -> None:
        key = (doc_id, entry_id)
        if key in self.answers:
            raise EvalError(f"rater {self.rater_id!r} answers {key} twice")
        self.answers[key] = frozenset(option_ids)

    def keys(self) -> set[ItemKey]:
        return set(self.answers)


@dataclass(frozen=True)
class KappaResult:
    kappa: float
    p_o: float
    p_e: float
    n_items: int


@dataclass(frozen=True)
class PRResult:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float | None:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else None

    @property
    def recall(self) -> float | None:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else None

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "precision": self.precision, "recall": self.recall}


@dataclass
class AgreementMatrix:
    rater_ids: list[str]
    values: np.ndarray

    def to_dict(self) -> dict:
        return {"raters": list(self.rater_ids), "values": self.values.tolist()}

    def rows(self, digits: int = 3) -> list[list[str]]:
        """Square table with a blank lower triangle, header row first."""
        out = [["", *self.rater_ids]]
        for i, rid in enumerate(self.rater_ids):
            out.append([rid] + ["" if j < i else f"{self.values[i, j]:.{digits}f}" for j in range(len(self.rater_ids))])
        return out


def category(option_ids: Iterable[str]) -> str:
    return "|".join(sorted(option_ids))


def _shared_keys(*sets: AnnotationSet) -> list[ItemKey]:
    keys = set.intersection(*(s.keys() for s in sets))
    if not keys:
        names = ", ".join(repr(s.rater_id) for s in sets)
        raise EvalError(f"no items shared by raters {names}")
    return sorted(keys)


def cohen_kappa(a: AnnotationSet, b: AnnotationSet) -> KappaResult:
    keys = _shared_keys(a, b)
    cats_a = [category(a.answers[k]) for k in keys]
    cats_b = [category(b.answers[k]) for k in keys]
    n = len(keys)
    p_o = sum(x == y for x, y in zip(cats_a, cats_b)) / n
    count_a, count_b = Counter(cats_a), Counter(cats_b)
    p_e = sum((count_a[c] / n) * (count_b[c] / n) for c in count_a)
    if p_o == 1.0:
        kappa = 1.0
    elif p_e >= 1.0:
        kappa = 0.0
    else:
        kappa = (p_o - p_e) / (1.0 - p_e)
    return KappaResult(kappa, p_o, p_e, n)


def agreement_matrix(sets: Sequence[AnnotationSet]) -> AgreementMatrix:
    if len(sets) < 2:
        raise EvalError("need at least two annotation sets")
    n = len(sets)
    values = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            try:
                values[i, j] = values[j, i] = cohen_kappa(sets[i], sets[j]).kappa
            except EvalError as exc:
                raise EvalError(f"{sets[i].rater_id} vs {sets[j].rater_id}: {exc}") from exc
    return AgreementMatrix([s.rater_id for s in sets], values)


def precision_recall(llm: AnnotationSet, r1: AnnotationSet, r2: AnnotationSet) -> PRResult:
    tp = fp = fn = 0
    for key in _shared_keys(llm, r1, r2):
        predicted = llm.answers[key]
        either = r1.answers[key] | r2.answers[key]
        both = r1.answers[key] & r2.answers[key]
        tp += len(predicted & either)
        fp += len(predicted - either)
        fn += len(both - predicted)
    return PRResult(tp, fp, fn)


def load_annotations(path: str | Path) -> list[AnnotationSet]:
    """Read JSON-lines ``{"rater", "doc_id", "entry_id", "answers"}``.

    Raters come back in order of first appearance. Human answers must be
    non-empty.
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read annotations {path}: {exc}") from exc
    sets: dict[str, AnnotationSet] = {}
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            rater, doc_id, entry_id, answers = row["rater"], row["doc_id"], row["entry_id"], row["answers"]
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"{path}:{lineno}: malformed annotation line") from exc
        if not isinstance(answers, list) or not answers:
            raise ConfigError(f"{path}:{lineno}: answers must be a non-empty list")
        sets.setdefault(rater, AnnotationSet(rater)).add(doc_id, entry_id, answers)
    return list(sets.values())


def annotations_from_records(records: Iterable) -> list[AnnotationSet]:
    """One set per model; failed extractions become empty answers."""
    sets: dict[str, AnnotationSet] = {}
    for rec in records:
        answers = [] if rec.error else rec.answer_ids
        sets.setdefault(rec.model_id, AnnotationSet(rec.model_id)).add(rec.doc_id, rec.entry_id, answers)
    return list(sets.values())


def evaluate(humans: Sequence[AnnotationSet], models: Sequence[AnnotationSet]) -> dict:
    """Kappa matrix over humans then models, and P/R of each model vs the first two humans."""
    if len(humans) < 2:
        raise EvalError(f"need two human raters, found {len(humans)}")
    matrix = agreement_matrix([*humans, *models])
    r1, r2 = humans[0], humans[1]
    pr = {m.rater_id: precision_recall(m, r1, r2) for m in models}
    return {"kappa_matrix": matrix, "precision_recall": pr, "researchers": [r1.rater_id, r2.rater_id]}


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.3f}"


def write_report(report: Mapping, out_dir: str | Path) -> dict[str, Path]:
    """Write ``report.json``, ``kappa_matrix.csv`` and ``precision_recall.csv``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    matrix: AgreementMatrix = report["kappa_matrix"]
    pr: Mapping[str, PRResult] = report["precision_recall"]
    paths = {
        "json": out / "report.json",
        "kappa": out / "kappa_matrix.csv",
        "pr": out / "precision_recall.csv",
    }
    payload = {
        "kappa_matrix": matrix.to_dict(),
        "precision_recall": {m: r.to_dict() for m, r in pr.items()},
        "researchers": list(report["researchers"]),
    }
    paths["json"].write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    with paths["kappa"].open("w", newline="", encoding="utf-8") as fh:
        csv.writer(fh).writerows(matrix.rows())
    models = list(pr)
    with paths["pr"].open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["", *models])
        writer.writerow(["Precision", *(_fmt(pr[m].precision) for m in models)])
        writer.writerow(["Recall", *(_fmt(pr[m].recall) for m in models)])
    return paths
