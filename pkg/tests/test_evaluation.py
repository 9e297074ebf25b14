import csv
import json
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slr_extract.errors import ConfigError, EvalError
from slr_extract.evaluation import (
    AnnotationSet,
    agreement_matrix,
    annotations_from_records,
    cohen_kappa,
    evaluate,
    load_annotations,
    precision_recall,
    write_report,
)
from slr_extract.extraction import ExtractionRecord

from oracles import contingency_kappa, enumerate_pr, random_set


def single_choice(rater, labels):
    return AnnotationSet(rater, {(f"d{i}", "e"): {lab} for i, lab in enumerate(labels)})


def test_kappa_zero_hand_case():
    res = cohen_kappa(single_choice("a", "AABB"), single_choice("b", "ABAB"))
    assert (res.p_o, res.p_e, res.kappa, res.n_items) == (0.5, 0.5, 0.0, 4)


def test_kappa_half_hand_case():
    res = cohen_kappa(single_choice("a", "AAAB"), single_choice("b", "AABB"))
    assert (res.p_o, res.p_e, res.kappa) == (0.75, 0.5, 0.5)


def test_kappa_self_is_one():
    a = single_choice("a", "ABCAB")
    assert cohen_kappa(a, a).kappa == 1.0


def test_kappa_single_category_conventions():
    same = single_choice("a", "AAA")
    assert cohen_kappa(same, single_choice("b", "AAA")).kappa == 1.0
    # Both marginals concentrated on different single categories: p_e = 0.
    assert cohen_kappa(same, single_choice("b", "BBB")).kappa == 0.0


def test_kappa_multiselect_is_exact_set():
    a = AnnotationSet("a", {("d", "e1"): {"A", "B"}, ("d", "e2"): {"A"}})
    b = AnnotationSet("b", {("d", "e1"): {"B", "A"}, ("d", "e2"): {"A", "C"}})
    assert cohen_kappa(a, b).p_o == 0.5


def test_kappa_uses_key_intersection():
    a = AnnotationSet("a", {("d", "1"): {"A"}, ("d", "2"): {"B"}, ("d", "3"): {"A"}})
    b = AnnotationSet("b", {("d", "1"): {"A"}, ("d", "2"): {"B"}, ("x", "9"): {"B"}})
    assert cohen_kappa(a, b).n_items == 2
    with pytest.raises(EvalError):
        cohen_kappa(a, AnnotationSet("c", {("z", "z"): {"A"}}))


def test_kappa_random_vs_contingency_oracle():
    rng = random.Random(3)
    for _ in range(300):
        n = rng.randint(1, 30)
        cats = [chr(65 + i) for i in range(rng.randint(1, 6))]
        multi = rng.random() < 0.5
        a = random_set(rng, "a", n, cats, multi)
        b = random_set(rng, "b", n, cats, multi)
        got = cohen_kappa(a, b)
        want, p_o, p_e = contingency_kappa(a, b)
        assert abs(got.kappa - want) <= 1e-12
        assert abs(got.p_o - p_o) <= 1e-12 and abs(got.p_e - p_e) <= 1e-12
        assert -1.0 <= got.kappa <= 1.0
        assert (got.kappa == 1.0) == (got.p_o == 1.0)


def test_matrix_identical_sets():
    a = single_choice("r1", "AB")
    m = agreement_matrix([a, single_choice("r2", "AB")])
    assert m.values.tolist() == [[1.0, 1.0], [1.0, 1.0]]


def test_matrix_symmetric_unit_diagonal_and_layout():
    rng = random.Random(5)
    sets = [random_set(rng, name, 15, list("ABCD"), multi=False) for name in ("R1", "R2", "M1", "M2", "M3")]
    m = agreement_matrix(sets)
    assert m.values.shape == (5, 5)
    assert np.array_equal(m.values, m.values.T)
    assert np.all(np.diag(m.values) == 1.0)
    rows = m.rows()
    assert rows[0] == ["", "R1", "R2", "M1", "M2", "M3"]
    assert rows[3][:3] == ["M1", "", ""] and rows[3][3] == "1.000"


def test_matrix_permutation_invariant():
    rng = random.Random(9)
    sets = [random_set(rng, f"r{i}", 12, list("ABC")) for i in range(4)]
    base = agreement_matrix(sets).values
    perm = [2, 0, 3, 1]
    permuted = agreement_matrix([sets[i] for i in perm]).values
    assert np.allclose(permuted, base[np.ix_(perm, perm)], atol=0, rtol=0)


def test_matrix_errors():
    with pytest.raises(EvalError):
        agreement_matrix([single_choice("a", "A")])
    with pytest.raises(EvalError, match="a vs c"):
        agreement_matrix([single_choice("a", "A"), single_choice("b", "A"), AnnotationSet("c", {("q", "q"): {"A"}})])


def test_pr_perfect():
    a = AnnotationSet("x", {("d", "e"): {"A", "B"}, ("d", "f"): {"C"}})
    res = precision_recall(a, a, a)
    assert (res.precision, res.recall) == (1.0, 1.0)


def test_pr_worked_example_one():
    res = precision_recall(
        AnnotationSet("llm", {("d", "e"): {"A", "B"}}),
        AnnotationSet("r1", {("d", "e"): {"A"}}),
        AnnotationSet("r2", {("d", "e"): {"A", "C"}}),
    )
    assert (res.tp, res.fp, res.fn, res.precision, res.recall) == (1, 1, 0, 0.5, 1.0)


def test_pr_worked_example_two():
    res = precision_recall(
        AnnotationSet("llm", {("d", "e"): {"B"}}),
        AnnotationSet("r1", {("d", "e"): {"A"}}),
        AnnotationSet("r2", {("d", "e"): {"A"}}),
    )
    assert (res.tp, res.fp, res.fn, res.precision, res.recall) == (0, 1, 1, 0.0, 0.0)


def test_pr_undefined_is_none():
    empty = AnnotationSet("llm", {("d", "e"): set()})
    r1 = AnnotationSet("r1", {("d", "e"): {"A"}})
    r2 = AnnotationSet("r2", {("d", "e"): {"B"}})
    res = precision_recall(empty, r1, r2)
    assert (res.tp, res.fp, res.fn) == (0, 0, 0)
    assert res.precision is None and res.recall is None
    assert res.to_dict()["precision"] is None


def test_pr_failed_extraction_counts_consensus_misses():
    res = precision_recall(
        AnnotationSet("llm", {("d", "e"): set()}),
        AnnotationSet("r1", {("d", "e"): {"A", "B"}}),
        AnnotationSet("r2", {("d", "e"): {"A"}}),
    )
    assert (res.tp, res.fp, res.fn) == (0, 0, 1)


def test_pr_random_vs_enumeration():
    rng = random.Random(21)
    for _ in range(300):
        cats = list("ABCDEF")
        sets = [random_set(rng, r, rng.randint(1, 20), cats) for r in ("llm", "r1", "r2")]
        res = precision_recall(*sets)
        assert (res.tp, res.fp, res.fn) == enumerate_pr(*sets)


def test_pr_empty_intersection():
    with pytest.raises(EvalError):
        precision_recall(single_choice("a", "A"), single_choice("b", "A"), AnnotationSet("c", {("x", "y"): {"A"}}))


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1))
def test_pr_monotone_in_unsupported_answers(seed):
    rng = random.Random(seed)
    llm, r1, r2 = (random_set(rng, r, 8, list("ABCD")) for r in ("llm", "r1", "r2"))
    before = precision_recall(llm, r1, r2)
    key = rng.choice(sorted(llm.keys()))
    llm.answers[key] = llm.answers[key] | {"ZZ"}
    after = precision_recall(llm, r1, r2)
    assert after.fp == before.fp + 1
    assert (after.tp, after.fn) == (before.tp, before.fn)


def test_load_annotations(tmp_path):
    path = tmp_path / "ann.jsonl"
    rows = [
        {"rater": "R2", "doc_id": "d", "entry_id": "e", "answers": ["A"]},
        {"rater": "R1", "doc_id": "d", "entry_id": "e", "answers": ["A", "B"]},
    ]
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n\n")
    sets = load_annotations(path)
    assert [s.rater_id for s in sets] == ["R2", "R1"]
    assert sets[1].answers[("d", "e")] == {"A", "B"}


@pytest.mark.parametrize(
    "line",
    ['{"rater": "R", "doc_id": "d", "entry_id": "e", "answers": []}', '{"rater": "R"}', "not json"],
)
def test_load_annotations_invalid(tmp_path, line):
    path = tmp_path / "ann.jsonl"
    path.write_text(line)
    with pytest.raises(ConfigError):
        load_annotations(path)


def test_duplicate_annotation_rejected(tmp_path):
    path = tmp_path / "ann.jsonl"
    row = json.dumps({"rater": "R", "doc_id": "d", "entry_id": "e", "answers": ["A"]})
    path.write_text(row + "\n" + row)
    with pytest.raises(EvalError, match="twice"):
        load_annotations(path)


def test_records_to_annotations():
    recs = [
        ExtractionRecord("d", "e", "m1", answer_ids=["A"]),
        ExtractionRecord("d", "e", "m2", error="NoJsonArray"),
    ]
    m1, m2 = annotations_from_records(recs)
    assert m1.answers[("d", "e")] == {"A"} and m2.answers[("d", "e")] == frozenset()


def test_report_files(tmp_path):
    r1 = single_choice("Researcher 1", "ABAB")
    r2 = single_choice("Researcher 2", "ABAA")
    models = [single_choice(m, "ABBB") for m in ("DeepSeek", "Qwen-72B", "Qwen-7B")]
    paths = write_report(evaluate([r1, r2], models), tmp_path)
    with paths["kappa"].open() as fh:
        kappa_rows = list(csv.reader(fh))
    assert len(kappa_rows) == 6 and all(len(r) == 6 for r in kappa_rows)
    assert kappa_rows[2][1] == ""  # lower triangle blank
    with paths["pr"].open() as fh:
        pr_rows = list(csv.reader(fh))
    assert pr_rows[0] == ["", "DeepSeek", "Qwen-72B", "Qwen-7B"]
    assert [r[0] for r in pr_rows[1:]] == ["Precision", "Recall"]
    report = json.loads(paths["json"].read_text())
    assert set(report) >= {"kappa_matrix", "precision_recall"}
    assert set(report["precision_recall"]["DeepSeek"]) == {"tp", "fp", "fn", "precision", "recall"}


def test_evaluate_needs_two_humans():
    with pytest.raises(EvalError):
        evaluate([single_choice("R1", "A")], [single_choice("m", "A")])
