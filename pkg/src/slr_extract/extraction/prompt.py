"""Data-entry definitions and prompt rendering."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from ..errors import ConfigError, PromptError
from ..retrieval import ScoredChunk

BASE_SYSTEM_PROMPT = (
    "You are a helpful and meticulous research assistant who answers questions about "
    "study details carefully and adequately from context chunks of provided research papers. "
    "Formatting: Carefully read the QUESTION, ANSWERS, AND CONTEXT. If one or more options "
    'are correct, return ONLY a JSON array of the correct option IDs, e.g., ["A", "C"]. '
    "Return the IDs exactly as provided in ANSWERS (case-sensitive). "
    "Do NOT include any text besides the JSON array."
)


@dataclass(frozen=True)
class Option:
    option_id: str
    label: str

    def render(self) -> str:
        """How the option appears in the ANSWERS array."""
        if self.option_id == self.label:
            return self.option_id
        return f"{self.option_id}: {self.label}"


@dataclass(frozen=True)
class DataEntry:
    entry_id: str
    question: str
    options: tuple[Option, ...]

    def __post_init__(self) -> None:
        if not self.entry_id:
            raise ConfigError("data entry needs a non-empty entry_id")
        if not self.question or not self.question.strip():
            raise ConfigError(f"entry {self.entry_id!r} has an empty question")
        if len(self.options) < 2:
            raise ConfigError(f"entry {self.entry_id!r} needs at least two options")
        ids = [o.option_id for o in self.options]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"entry {self.entry_id!r} has duplicate option ids")
        if any(not i for i in ids):
            raise ConfigError(f"entry {self.entry_id!r} has an empty option id")

    @classmethod
    def from_labels(cls, entry_id: str, question: str, labels: Sequence[str]) -> DataEntry:
        """Entry whose option ids are the labels themselves."""
        return cls(entry_id, question, tuple(Option(label, label) for label in labels))

    @classmethod
    def from_dict(cls, data: dict) -> DataEntry:
        """Options may be plain label strings or ``{"id", "label"}`` objects."""
        try:
            options = tuple(
                Option(o, o) if isinstance(o, str) else Option(str(o.get("id", o.get("label"))), str(o.get("label", o.get("id"))))
                for o in data["options"]
            )
            return cls(str(data["entry_id"]), str(data["question"]), options)
        except (KeyError, TypeError, AttributeError) as exc:
            raise ConfigError(f"malformed data entry: {data!r}") from exc

    def to_dict(self) -> dict:
        return {
            "entry_id": self.entry_id,
            "question": self.question,
            "options": [{"id": o.option_id, "label": o.label} for o in self.options],
        }

    @property
    def option_ids(self) -> tuple[str, ...]:
        return tuple(o.option_id for o in self.options)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(o.label for o in self.options)


def load_entries(path: str | Path) -> list[DataEntry]:
    """Read a JSON array of ``{"entry_id", "question", "options"}`` objects.

    Each option is either a label string (its own id) or ``{"id", "label"}``.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read entries from {path}: {exc}") from exc
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{path} must hold a non-empty JSON array of entries")
    entries = [DataEntry.from_dict(item) for item in raw]
    ids = [e.entry_id for e in entries]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"{path} has duplicate entry ids")
    return entries


@dataclass(frozen=True)
class ChunkRef:
    doc_id: str
    chunk_index: int
    score: float


@dataclass(frozen=True)
class PromptBundle:
    system_text: str
    user_text: str
    entry_id: str
    chunk_refs: tuple[ChunkRef, ...]


def render_answers(entry: DataEntry) -> str:
    return json.dumps([o.render() for o in entry.options], ensure_ascii=False)


def build_prompt(entry: DataEntry, chunks: Sequence[ScoredChunk]) -> PromptBundle:
    if not chunks:
        raise PromptError(f"no context chunks for entry {entry.entry_id!r}")
    scores = [c.score for c in chunks]
    if any(a < b for a, b in zip(scores, scores[1:])):
        raise PromptError("context chunks must be ordered by descending score")
    context = "\n\n".join(
        f"--- CHUNK {i} (doc={sc.chunk.doc_id}, idx={sc.chunk.chunk_index}) ---\n{sc.chunk.text}"
        for i, sc in enumerate(chunks, start=1)
    )
    user_text = (
        f"QUESTION:\n{entry.question}\n\n"
        f"ANSWERS:\n{render_answers(entry)}\n\n"
        f"CONTEXT:\n{context}\n"
    )
    refs = tuple(ChunkRef(sc.chunk.doc_id, sc.chunk.chunk_index, sc.score) for sc in chunks)
    return PromptBundle(BASE_SYSTEM_PROMPT, user_text, entry.entry_id, refs)
