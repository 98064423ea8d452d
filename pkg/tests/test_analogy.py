import json

import numpy as np
import pytest

from conftest import REFERENCE_SECTIONS, random_store
from embkit.analogy import (
    AnalogyQuestion,
    aggregate_accuracies,
    evaluate,
    load_analogy_file,
    solve,
)
from embkit.errors import ParseError
from embkit.store import EmbeddingStore, SubwordTable


def write(tmp_path, text, name="q.txt"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadAnalogyFile:
    def test_single_section_single_question(self, tmp_path):
        path = write(tmp_path, ": family\nքույր եղբայր մայր հայր\n")
        ds = load_analogy_file(path)
        assert len(ds.sections) == 1
        assert ds.sections[0].name == "family"
        assert ds.sections[0].questions == [
            AnalogyQuestion("քույր", "եղբայր", "մայր", "հայր")
        ]

    def test_words_lowercased(self, tmp_path):
        path = write(tmp_path, ": s\nAthens GREECE Paris France\n")
        q = load_analogy_file(path).sections[0].questions[0]
        assert q == AnalogyQuestion("athens", "greece", "paris", "france")

    def test_question_before_header_rejected(self, tmp_path):
        path = write(tmp_path, "a b c d\n: s\n")
        with pytest.raises(ParseError) as err:
            load_analogy_file(path)
        assert err.value.line == 1

    def test_wrong_token_count_reports_line(self, tmp_path):
        path = write(tmp_path, ": s\na b c\n")
        with pytest.raises(ParseError) as err:
            load_analogy_file(path)
        assert err.value.line == 2

    def test_positional_kind_assignment(self, tmp_path):
        text = "".join(f": s{i}\na b c d\n" for i in range(7))
        ds = load_analogy_file(write(tmp_path, text))
        kinds = [s.kind for s in ds.sections]
        assert kinds == ["semantic"] * 5 + ["syntactic"] * 2

    def test_kinds_sidecar_override(self, tmp_path):
        qpath = write(tmp_path, ": alpha\na b c d\n: beta\na b c d\n")
        kpath = write(tmp_path, "alpha syntactic\n", name="kinds.txt")
        ds = load_analogy_file(qpath, kinds_path=kpath)
        assert ds.sections[0].kind == "syntactic"
        assert ds.sections[1].kind == "semantic"

    def test_duplicate_section_rejected(self, tmp_path):
        path = write(tmp_path, ": s\na b c d\n: s\n")
        with pytest.raises(ParseError):
            load_analogy_file(path)

    def test_question_count(self, tmp_path):
        text = ": a\nq w e r\nq w e r\n: b\nq w e r\n"
        ds = load_analogy_file(write(tmp_path, text))
        assert ds.question_count == 3


class TestSolve:
    def test_single_candidate_is_correct(self):
        store = random_store(["a", "b", "c", "d"], 6, seed=1)
        pred = solve(store, AnalogyQuestion("a", "b", "c", "d"), exclude_inputs=True)
        assert not pred.skipped
        assert pred.predicted == "d"
        assert pred.correct

    def test_five_word_geometry(self):
        vectors = np.array(
            [
                [1.0, 0.0, 0.0],   # a
                [0.0, 1.0, 0.0],   # b
                [1.0, 0.0, 0.2],   # c
                [0.0, 1.0, 0.2],   # d
                [-1.0, -1.0, 0.0],  # e
            ],
            dtype=np.float32,
        )
        store = EmbeddingStore(["a", "b", "c", "d", "e"], vectors)
        # independent oracle: exhaustive normalized cosine scan
        normed = vectors / np.linalg.norm(vectors, axis=1, keepdims=True)
        p = normed[1] - normed[0] + normed[2]
        sims = normed @ (p / np.linalg.norm(p))
        sims[[0, 1, 2]] = -np.inf
        assert int(np.argmax(sims)) == 3

        pred = solve(store, AnalogyQuestion("a", "b", "c", "d"))
        assert pred.predicted == "d"
        assert pred.correct

    def test_oov_question_skipped_on_plain_store(self):
        store = random_store(["a", "b", "c", "d"], 4, seed=2)
        pred = solve(store, AnalogyQuestion("zz", "b", "c", "d"))
        assert pred.skipped
        assert pred.predicted is None
        assert not pred.correct

    def test_oov_answer_also_skips(self):
        store = random_store(["a", "b", "c"], 4, seed=2)
        pred = solve(store, AnalogyQuestion("a", "b", "c", "zz"))
        assert pred.skipped

    def test_subword_store_never_skips(self):
        base = random_store(["aa", "bb", "cc", "dd"], 4, seed=3)
        buckets = random_store([str(i) for i in range(64)], 4, seed=4)
        store = EmbeddingStore(
            base.words, base.vectors, SubwordTable(3, 3, buckets.vectors)
        )
        pred = solve(store, AnalogyQuestion("zz", "bb", "cc", "dd"))
        assert not pred.skipped

    def test_identity_question_needs_include_inputs(self):
        store = random_store(["a", "b", "x", "y"], 8, seed=5)
        q = AnalogyQuestion("a", "b", "a", "b")
        with_inputs = solve(store, q, exclude_inputs=False)
        assert with_inputs.predicted == "b"
        assert with_inputs.correct
        excluded = solve(store, q, exclude_inputs=True)
        assert not excluded.correct
        assert excluded.predicted not in {"a", "b"}


class TestAggregation:
    def test_reference_micro_and_macro(self):
        entries = [
            (kind, acc / 100.0, count)
            for _, kind, acc, count in REFERENCE_SECTIONS
        ]
        agg = aggregate_accuracies(entries)
        assert agg["micro"]["semantic"] * 100 == pytest.approx(41.88, abs=0.05)
        assert agg["micro"]["syntactic"] * 100 == pytest.approx(15.35, abs=0.05)
        assert agg["micro"]["total"] * 100 == pytest.approx(26.04, abs=0.05)
        assert agg["macro"]["semantic"] * 100 == pytest.approx(33.12, abs=0.05)
        assert agg["macro"]["syntactic"] * 100 == pytest.approx(13.52, abs=0.05)
        assert agg["macro"]["total"] * 100 == pytest.approx(21.06, abs=0.05)

    def test_none_entries_excluded(self):
        agg = aggregate_accuracies(
            [("semantic", None, 0), ("syntactic", 0.5, 10)]
        )
        assert agg["micro"]["semantic"] is None
        assert agg["macro"]["semantic"] is None
        assert agg["micro"]["total"] == pytest.approx(0.5)

    def test_macro_is_plain_mean(self):
        agg = aggregate_accuracies(
            [("semantic", 0.2, 1), ("semantic", 0.4, 999)]
        )
        assert agg["macro"]["semantic"] == pytest.approx(0.3)


class TestEvaluate:
    def make_dataset(self, tmp_path):
        text = (
            ": sem\n"
            "a b c d\n"
            "zz b c d\n"
            ": syn\n"
            "a b a b\n"
        )
        return load_analogy_file(write(tmp_path, text))

    def test_counts_and_accuracy(self, tmp_path):
        store = random_store(["a", "b", "c", "d"], 8, seed=6)
        ds = self.make_dataset(tmp_path)
        report = evaluate(store, ds, restrict=10, exclude_inputs=True)
        sem = report.sections[0]
        assert (sem.evaluated, sem.skipped) == (1, 1)
        assert sem.correct == 1  # only candidate after exclusion is d
        syn = report.sections[1]
        assert syn.evaluated == 1
        assert syn.correct == 0  # a:b::a:b can never be correct when excluded

    def test_single_correct_question_all_accuracies_one(self, tmp_path):
        store = random_store(["a", "b", "c", "d"], 8, seed=6)
        ds = load_analogy_file(write(tmp_path, ": s\na b c d\n"))
        report = evaluate(store, ds, restrict=10)
        assert report.sections[0].accuracy == 1.0
        assert report.micro["semantic"] == 1.0
        assert report.micro["total"] == 1.0
        assert report.macro["total"] == 1.0
        assert report.micro["syntactic"] is None

    def test_restriction_causes_skips(self, tmp_path):
        store = random_store(["a", "b", "c", "d"], 8, seed=6)
        ds = load_analogy_file(write(tmp_path, ": s\na b c d\n"))
        report = evaluate(store, ds, restrict=3)
        assert report.sections[0].skipped == 1
        assert report.sections[0].accuracy is None

    def test_scaling_store_leaves_report_unchanged(self, tmp_path):
        words = [f"w{i}" for i in range(30)] + ["a", "b", "c", "d"]
        store = random_store(words, 8, seed=7)
        scaled = EmbeddingStore(words, store.vectors * 25.0)
        text = ": s\na b c d\nw1 w2 w3 w4\nw5 b w7 d\n"
        ds = load_analogy_file(write(tmp_path, text))
        r1 = evaluate(store, ds, restrict=100)
        r2 = evaluate(scaled, ds, restrict=100)
        assert r1.to_json_dict() == r2.to_json_dict()

    def test_report_deterministic(self, tmp_path):
        store = random_store(["a", "b", "c", "d", "e"], 6, seed=8)
        ds = self.make_dataset(tmp_path)
        r1 = evaluate(store, ds)
        r2 = evaluate(store, ds)
        assert r1.to_json() == r2.to_json()

    def test_macro_total_is_mean_of_section_values(self, tmp_path):
        words = [f"w{i}" for i in range(20)] + ["a", "b", "c", "d"]
        store = random_store(words, 8, seed=9)
        text = ": s1\na b c d\nw0 w1 w2 w3\n: s2\nw4 w5 w6 w7\nw8 w9 w10 w11\n"
        ds = load_analogy_file(write(tmp_path, text))
        report = evaluate(store, ds, restrict=100)
        accs = [s.accuracy for s in report.sections if s.accuracy is not None]
        assert report.macro["total"] == pytest.approx(sum(accs) / len(accs))

    def test_invalid_restrict(self, tmp_path):
        store = random_store(["a"], 4, seed=1)
        ds = load_analogy_file(write(tmp_path, ": s\na a a a\n"))
        with pytest.raises(ValueError):
            evaluate(store, ds, restrict=0)

    def test_json_is_valid_and_ordered(self, tmp_path):
        store = random_store(["a", "b", "c", "d"], 6, seed=2)
        ds = self.make_dataset(tmp_path)
        report = evaluate(store, ds)
        parsed = json.loads(report.to_json())
        assert parsed["sections"][0]["name"] == "sem"
        assert set(parsed["micro"]) == {"semantic", "syntactic", "total"}

    def test_table_rendering_mentions_sections(self, tmp_path):
        store = random_store(["a", "b", "c", "d"], 6, seed=2)
        ds = self.make_dataset(tmp_path)
        table = evaluate(store, ds).render_table()
        assert "sem" in table
        assert "micro total" in table
