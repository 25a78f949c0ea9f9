import json
import struct

import numpy as np
import pytest

from natbrack.core import BracketSet, Sentence, Span
from natbrack.data import (
    CorpusRecord,
    EmbeddingFormatError,
    TreeParseError,
    corpus_stats,
    filter_wiki_sentences,
    load_corpus,
    map_answer_to_spans,
    map_hyperlink_to_span,
    read_cemb,
    read_ptb_tree,
    tree_to_string,
    write_corpus,
)


class TestLoadCorpus:
    def test_basic_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"id":"s1","tokens":["a","b","c"],"brackets":[[1,3]]}\n')
        records = load_corpus(path)
        assert len(records) == 1
        assert set(records[0].brackets) == {Span(1, 3)}

    def test_empty_file(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text("")
        assert load_corpus(path) == []

    def test_out_of_bounds_bracket_skipped(self, tmp_path, caplog):
        path = tmp_path / "c.jsonl"
        path.write_text(
            '{"id":"s1","tokens":["a","b","c"],"brackets":[[2,9]]}\n'
            '{"id":"s2","tokens":["a","b"],"brackets":[[0,2]]}\n')
        with caplog.at_level("WARNING"):
            records = load_corpus(path)
        assert [r.sentence.id for r in records] == ["s2"]
        assert any("skipping record" in m for m in caplog.messages)

    def test_roundtrip(self, tmp_path):
        gold, _ = read_ptb_tree("(S (NP (DT the) (NN cat)) (VP (VBD sat)))")
        records = [
            CorpusRecord(
                Sentence(id="s1", tokens=("the", "cat", "sat"),
                         pos=("DT", "NN", "VBD"),
                         char_spans=((0, 3), (4, 7), (8, 11))),
                BracketSet.of([(0, 2)]),
                gold,
            ),
            CorpusRecord(Sentence(id="s2", tokens=("hi",)), BracketSet.of([])),
        ]
        path = tmp_path / "c.jsonl"
        write_corpus(path, records)
        loaded = load_corpus(path)
        assert loaded == records


class TestAnswerMapping:
    def test_single_match(self):
        s = Sentence(id="s", tokens=("the", "cat", "sat"))
        assert map_answer_to_spans(s, ["the", "cat"]) == [Span(0, 2)]

    def test_all_exact_matches_kept(self):
        s = Sentence(id="s", tokens=("a", "b", "a", "b"))
        assert map_answer_to_spans(s, ["a", "b"]) == [Span(0, 2), Span(2, 4)]

    def test_unmappable_answer_discarded(self):
        s = Sentence(id="s", tokens=("the", "cat", "sat"))
        assert map_answer_to_spans(s, ["dog"]) == []

    def test_case_sensitive(self):
        s = Sentence(id="s", tokens=("The", "cat"))
        assert map_answer_to_spans(s, ["the", "cat"]) == []

    def test_increasing_no_duplicates(self):
        s = Sentence(id="s", tokens=("a",) * 6)
        spans = map_answer_to_spans(s, ["a", "a"])
        assert spans == sorted(set(spans), key=lambda sp: sp.i)


class TestHyperlinkMapping:
    SENT = Sentence(id="s", tokens=("aa", "bb", "cc", "dd", "ee", "ff"),
                    char_spans=((0, 2), (3, 5), (6, 8), (9, 11), (12, 14), (15, 17)))

    def test_exact_token_cover(self):
        assert map_hyperlink_to_span(self.SENT, (6, 11)) == Span(2, 4)

    def test_partial_token_cover(self):
        # half of token 2 and half of token 3
        assert map_hyperlink_to_span(self.SENT, (7, 10)) == Span(2, 4)

    def test_inside_single_token(self):
        assert map_hyperlink_to_span(self.SENT, (16, 17)) == Span(5, 6)

    def test_outside_all_tokens(self):
        with pytest.raises(ValueError):
            map_hyperlink_to_span(self.SENT, (100, 105))


class TestWikiFilter:
    def rec(self, n, brackets):
        return CorpusRecord(
            Sentence(id="s", tokens=tuple(f"t{k}" for k in range(n))),
            BracketSet.of(brackets))

    def test_long_sentence_dropped(self):
        assert filter_wiki_sentences([self.rec(101, [(0, 3)])]) == []

    def test_only_single_word_brackets_dropped(self):
        assert filter_wiki_sentences([self.rec(10, [(2, 3)])]) == []

    def test_kept(self):
        recs = [self.rec(50, [(1, 4)])]
        assert filter_wiki_sentences(recs) == recs


class TestPtbReader:
    def test_basic(self):
        tree, sentence = read_ptb_tree("(S (NP (DT the) (NN cat)) (VP (VBD sat)))")
        assert sentence.tokens == ("the", "cat", "sat")
        assert sentence.pos == ("DT", "NN", "VBD")
        assert ("NP", Span(0, 2)) in tree.labeled_spans()

    def test_single_token(self):
        tree, sentence = read_ptb_tree("(X (A a))")
        assert sentence.tokens == ("a",)
        assert tree.span_set() == {Span(0, 1)}

    def test_truncated_input(self):
        with pytest.raises(TreeParseError) as err:
            read_ptb_tree("(S (NP")
        assert err.value.position == 6

    def test_empty_input(self):
        with pytest.raises(TreeParseError):
            read_ptb_tree("")

    def test_roundtrip_string(self):
        text = "(S (NP (DT the) (NN cat)) (VP (VBD sat)))"
        tree, _ = read_ptb_tree(text)
        assert tree_to_string(tree) == text

    def test_empty_top_label(self):
        tree, sentence = read_ptb_tree("( (S (NP (DT the) (NN cat)) (VBD sat)))")
        assert sentence.tokens == ("the", "cat", "sat")
        assert tree.label == "TOP"


def fixture_records():
    """5 hand-built records; the expected statistics below are counted by hand."""
    def rec(tokens, pos, brackets, gold):
        gold_tree, _ = read_ptb_tree(gold)
        return CorpusRecord(Sentence(id="f", tokens=tokens, pos=pos),
                            BracketSet.of(brackets), gold_tree)

    return [
        # gold spans: S(0,3), NP(0,2)
        rec(("the", "cat", "sat"), ("DT", "NN", "VBD"),
            [(0, 2), (1, 2)], "(S (NP (DT the) (NN cat)) (VBD sat))"),
        # gold spans: S(0,4), NP(0,2), VP(2,4); (1,3) crosses NP and VP
        rec(("a", "dog", "bit", "me"), ("DT", "NN", "VBD", "PRP"),
            [(1, 3), (2, 4)], "(S (NP (DT a) (NN dog)) (VP (VBD bit) (PRP me)))"),
        rec(("go",), ("VB",), [(0, 1)], "(S (VB go))"),
        # gold spans: S(0,2); bracket (0,2) = S
        rec(("they", "ran"), ("PRP", "VBD"), [(0, 2)], "(S (PRP they) (VBD ran))"),
        rec(("it", "is", "fine"), ("PRP", "VBZ", "JJ"), [],
            "(S (PRP it) (VP (VBZ is) (JJ fine)))"),
    ]


class TestCorpusStats:
    def test_brackets_per_sentence(self):
        recs = fixture_records()[:2]
        report = corpus_stats(recs)
        assert report.brackets_per_sentence == pytest.approx(2.0)

    def test_fixture_counts(self):
        report = corpus_stats(fixture_records())
        # 6 brackets over 5 sentences
        assert report.sentences == 5
        assert report.total_brackets == 6
        assert report.brackets_per_sentence == pytest.approx(1.2)
        # single-word: (1,2) and (0,1) -> 2/6
        assert report.pct_single_word == pytest.approx(100 * 2 / 6)
        # in reference: (0,2) of rec1, (2,4) of rec2, (0,1) of rec3 (its S
        # span), (0,2) of rec4 -> 4/6
        assert report.pct_in_reference == pytest.approx(100 * 4 / 6)
        # conflicting: (1,3) of rec2 -> 1/6
        assert report.pct_conflicting == pytest.approx(100 / 6)
        # NP spans: (0,2) rec1 found, (0,2) rec2 missed -> 1/2
        assert report.label_coverage["NP"] == pytest.approx(0.5)
        # VP spans: (2,4) rec2 found, (1,3) rec5 missed -> 1/2
        assert report.label_coverage["VP"] == pytest.approx(0.5)
        # S spans: rec3's (0,1) and rec4's (0,2) bracketed -> 2/5
        assert report.label_coverage["S"] == pytest.approx(0.4)

    def test_single_plus_multi_sums_to_100(self):
        report = corpus_stats(fixture_records())
        multi = 100.0 - report.pct_single_word
        assert report.pct_single_word + multi == pytest.approx(100.0)

    def test_reference_rows_omitted_without_gold(self):
        recs = [CorpusRecord(r.sentence, r.brackets) for r in fixture_records()]
        report = corpus_stats(recs)
        assert report.pct_in_reference is None
        assert report.pct_conflicting is None
        assert report.label_coverage == {}

    def test_report_lines_render(self):
        lines = corpus_stats(fixture_records()).lines()
        assert any("Brackets/sentence" in line for line in lines)


def write_cemb(path, sentences, dim, version=1, magic=b"CEMB"):
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack("<II", version, dim))
        for vecs in sentences:
            fh.write(struct.pack("<I", len(vecs)))
            fh.write(np.asarray(vecs, dtype="<f4").tobytes())


class TestCemb:
    def test_read(self, tmp_path):
        path = tmp_path / "e.cemb"
        rng = np.random.default_rng(0)
        sents = [rng.normal(size=(3, 4)).astype("<f4"), rng.normal(size=(1, 4)).astype("<f4")]
        write_cemb(path, sents, 4)
        loaded = read_cemb(path)
        assert len(loaded) == 2
        assert np.allclose(loaded[0], sents[0])
        assert loaded[1].shape == (1, 4)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "e.cemb"
        write_cemb(path, [], 4, magic=b"XXXX")
        with pytest.raises(EmbeddingFormatError):
            read_cemb(path)

    def test_bad_version(self, tmp_path):
        path = tmp_path / "e.cemb"
        write_cemb(path, [], 4, version=9)
        with pytest.raises(EmbeddingFormatError):
            read_cemb(path)

    def test_truncated(self, tmp_path):
        path = tmp_path / "e.cemb"
        write_cemb(path, [np.zeros((2, 4))], 4)
        data = path.read_bytes()
        path.write_bytes(data[:-5])
        with pytest.raises(EmbeddingFormatError):
            read_cemb(path)
