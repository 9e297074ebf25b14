"""
Agreement and extraction quality
================================

Two human raters and three models answer the same items. Pairwise Cohen's
kappa goes into a square matrix; precision and recall of each model are
measured against the two raters.
"""

# %%
import numpy as np

from slr_extract.evaluation import AnnotationSet, agreement_matrix, evaluate, precision_recall

rng = np.random.default_rng(0)
labels = ["Tabular", "Time-series", "Images", "Text"]
items = [(f"paper{i}", "data_type") for i in range(40)]
truth = {key: {labels[rng.integers(len(labels))]} for key in items}


def noisy(rater, flip):
    """Copy the truth, replacing a fraction ``flip`` of answers at random."""
    answers = {}
    for key, value in truth.items():
        answers[key] = {labels[rng.integers(len(labels))]} if rng.random() < flip else set(value)
    return AnnotationSet(rater, answers)


humans = [noisy("Researcher 1", 0.05), noisy("Researcher 2", 0.05)]
models = [noisy("Model A", 0.15), noisy("Model B", 0.2), noisy("Model C", 0.45)]

# %%
# The kappa matrix, rendered with a blank lower triangle.
matrix = agreement_matrix(humans + models)
for row in matrix.rows():
    print("".join(f"{cell:>14}" for cell in row))

# %%
# Precision counts a model answer as correct when either researcher gave it;
# recall only asks for answers both researchers agreed on.
for model in models:
    pr = precision_recall(model, *humans)
    print(f"{model.rater_id}: tp={pr.tp} fp={pr.fp} fn={pr.fn} precision={pr.precision:.3f} recall={pr.recall:.3f}")

# %%
# Multi-select answers are compared as exact sets for kappa.
a = AnnotationSet("a", {("p", "e"): {"Tabular", "Text"}})
b = AnnotationSet("b", {("p", "e"): {"Text", "Tabular"}})
report = evaluate([a, b], [AnnotationSet("m", {("p", "e"): {"Text"}})])
print(report["precision_recall"]["m"])
