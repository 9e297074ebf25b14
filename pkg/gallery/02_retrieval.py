"""
Retrieving context for a data entry
===================================

Each data entry (a question plus its answer labels) becomes a retrieval
query. Chunks are ranked by cosine similarity and the top three go into the
prompt. The hash embedder used here is deterministic and needs no model
download, which makes ranking behaviour easy to inspect.
"""

# %%
import numpy as np

from slr_extract.corpus import ChunkingParams, Document
from slr_extract.extraction import DataEntry
from slr_extract.retrieval import HashEmbedder, Retriever, cosine_similarity, query_text

entry = DataEntry.from_labels(
    "data_type",
    "Which data type is used in this study?",
    ["Tabular", "Time-series", "Images", "Text", "Video", "Audio", "Multi-modal"],
)
print(query_text(entry.question, entry.labels))

# %%
# A toy article: background paragraphs with one sentence that mentions the
# data type.
paragraphs = [
    "Digital health applications are increasingly common in clinical practice.",
    "Participants were recruited from three outpatient clinics over two years.",
    "The study uses Time-series data recorded by a wrist-worn accelerometer.",
    "Ethical approval was obtained from the institutional review board.",
    "Limitations include a modest sample size and a single country of origin.",
]
doc = Document("toy", "\n\n".join(paragraphs))

retriever = Retriever(HashEmbedder(), ChunkingParams(chunk_size=12, overlap=4), k=3)
for hit in retriever.retrieve(doc, query_text(entry.question, entry.labels)):
    print(f"{hit.score:+.3f}  idx={hit.chunk.chunk_index}  {hit.chunk.text[:70]!r}")

# %%
# Cosine similarity itself, on a few hand-picked vectors.
print(cosine_similarity([1, 0], [1, 0]), cosine_similarity([1, 0], [0, 1]), cosine_similarity([1, 0], [1, 1]))

# %%
# Hash embeddings are unit-length bag-of-token vectors, so repeating a text
# does not change its direction.
emb = HashEmbedder()
a, b = emb.encode(["heart rate data", "heart rate data heart rate data"])
print("norms:", np.linalg.norm(a).round(6), np.linalg.norm(b).round(6), "| cosine:", round(cosine_similarity(a, b), 6))
