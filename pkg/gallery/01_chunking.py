"""
Sliding-window chunking
=======================

Articles are split into overlapping token windows before retrieval. This
walks through the window arithmetic on a small synthetic document and checks
it against the closed-form chunk count.
"""

# %%
# A document of 2300 whitespace tokens with the default parameters
# (1000-token windows, 500 tokens shared between neighbours).
import math

import numpy as np

from slr_extract.corpus import ChunkingParams, Document, chunk_document

text = " ".join(f"tok{i}" for i in range(2300))
doc = Document("demo", text)
params = ChunkingParams()
chunks = chunk_document(doc, params)

for c in chunks:
    print(f"chunk {c.chunk_index}: tokens [{c.token_start}, {c.token_end})  chars [{c.char_start}, {c.char_end})")

# %%
# Windows start at multiples of the stride (chunk_size - overlap) and stop as
# soon as one reaches the end of the document, so the last window may be short.
T = 2300
closed_form = 1 if T <= params.chunk_size else math.ceil((T - params.chunk_size) / params.stride) + 1
print("stride:", params.stride, "| chunks:", len(chunks), "| closed form:", closed_form)

# %%
# Every token is covered; interior neighbours share exactly ``overlap`` tokens.
coverage = np.zeros(T, dtype=int)
for c in chunks:
    coverage[c.token_start : c.token_end] += 1
print("uncovered tokens:", int((coverage == 0).sum()))
print("shared tokens per neighbour pair:", [a.token_end - b.token_start for a, b in zip(chunks, chunks[1:])])

# %%
# Chunk text is an exact slice of the source, so whitespace and punctuation
# survive untouched.
messy = Document("messy", "Heart-rate   data,\n\ncollected at home.\tN = 42.")
for c in chunk_document(messy, ChunkingParams(3, 1)):
    print(repr(c.text))
