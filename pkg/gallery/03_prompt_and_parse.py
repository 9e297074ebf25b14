"""
Prompting and answer parsing
============================

The retrieved chunks are assembled into a prompt with three sections:
QUESTION, ANSWERS and CONTEXT. The model's reply is then validated against
the entry's option ids.
"""

# %%
from slr_extract.corpus import Chunk
from slr_extract.errors import ParseError
from slr_extract.extraction import DataEntry, LLMConfig, RuleBasedMockLLM, build_prompt, parse_answer
from slr_extract.retrieval import ScoredChunk

entry = DataEntry.from_labels(
    "data_type",
    "Which data type is used in this study?",
    ["Tabular", "Time-series", "Images", "Text", "Video", "Audio", "Multi-modal"],
)
chunks = [
    ScoredChunk(Chunk("p1", 2, 1000, 2000, 5120, 5170, "Patients wore a wrist sensor recording heart rate."), 0.9),
    ScoredChunk(Chunk("p1", 0, 0, 1000, 0, 44, "We analysed tabular records from 312 wards."), 0.4),
]
prompt = build_prompt(entry, chunks)
print(prompt.system_text)
print()
print(prompt.user_text)

# %%
# The rule-based mock returns every label that appears verbatim in CONTEXT.
# Matching is case-sensitive, so "tabular" in the chunk text does not count.
reply = RuleBasedMockLLM().complete(LLMConfig("mock"), prompt)
print(reply.text)

# %%
# Parsing: a bare JSON array is strict; an array embedded in prose is found
# leniently; anything else is a typed error.
letters = DataEntry.from_labels("letters", "Pick", list("ABCDEFG"))
for text in ['["A", "C"]', 'Sure, here you go: ["C", "A"]', '["a"]', "[]", "No idea."]:
    try:
        ids, mode = parse_answer(text, letters)
        print(f"{text!r:34} -> {list(ids)} ({mode})")
    except ParseError as exc:
        print(f"{text!r:34} -> {exc.code}")

# %%
# Entries may also use short ids rendered next to their labels.
short = DataEntry.from_dict(
    {"entry_id": "setting", "question": "Where was it evaluated?", "options": [{"id": "A", "label": "Hospital"}, {"id": "B", "label": "Home"}]}
)
print(build_prompt(short, chunks[:1]).user_text.split("CONTEXT:")[0])
