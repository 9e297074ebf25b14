"""Validation of LLM answers against an entry's option ids."""

from __future__ import annotations

import json

from ..errors import ParseError
from .prompt import DataEntry

STRICT = "strict"
LENIENT = "lenient"

_decoder = json.JSONDecoder()


def _is_string_array(value) -> bool:
    return isinstance(value, list) and all(isinstance(v, str) for v in value)


def _first_string_array(text: str) -> list[str] | None:
    pos = text.find("[")
    while pos != -1:
        try:
            value, _ = _decoder.raw_decode(text, pos)
        except ValueError:
            value = None
        if _is_string_array(value):
            return value
        pos = text.find("[", pos + 1)
    return None


def parse_answer(raw_text: str, entry: DataEntry) -> tuple[tuple[str, ...], str]:
    """Return the selected option ids (in option order) and the parse mode.

    The whole trimmed completion is tried as a JSON string array first
    (``strict``). Failing that, the first ``[...]`` span that decodes to a
    string array is used (``lenient``). Ids are matched case-sensitively.
    """
    text = (raw_text or "").strip()
    try:
        value = json.loads(text)
    except ValueError:
        value = None
    if _is_string_array(value):
        mode = STRICT
    else:
        value = _first_string_array(text)
        mode = LENIENT
        if value is None:
            raise ParseError(ParseError.NO_JSON_ARRAY, f"no JSON string array in {text[:80]!r}")
    valid = set(entry.option_ids)
    for item in value:
        if item not in valid:
            raise ParseError(ParseError.UNKNOWN_OPTION_ID, f"unknown option id {item!r}", value=item)
    if not value:
        raise ParseError(ParseError.EMPTY_ANSWER, "answer array is empty")
    chosen = set(value)
    return tuple(i for i in entry.option_ids if i in chosen), mode
