from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from siamtext.corpus import (
    CorpusError,
    LabeledCorpus,
    LabeledSentence,
    PairSample,
    SynthClassSpec,
    build_pairs,
    generate_synthetic_corpus,
    load_labeled_corpus,
    load_synth_spec,
    split_corpus,
)
from siamtext.featurizer import build_vocabulary, encode_corpus, extract_trigrams


def write(tmp_path, text, name="c.tsv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoad:
    def test_two_lines(self, tmp_path):
        c = load_labeled_corpus(write(tmp_path, "good movie\tpos\nbad film\tneg\n"))
        assert [s.text for s in c.sentences] == ["good movie", "bad film"]
        assert c.label_set == {"pos", "neg"}

    def test_blank_lines_skipped(self, tmp_path):
        c = load_labeled_corpus(write(tmp_path, "a b\tx\n\n   \nc d\ty\n"))
        assert len(c) == 2

    def test_text_trimmed(self, tmp_path):
        c = load_labeled_corpus(write(tmp_path, "  padded  \tx\n"))
        assert c.sentences[0].text == "padded"

    def test_malformed_line_cites_number(self, tmp_path):
        with pytest.raises(CorpusError, match=":1:"):
            load_labeled_corpus(write(tmp_path, "only_text_no_tab\n"))
        with pytest.raises(CorpusError, match=":3:"):
            load_labeled_corpus(write(tmp_path, "a\tx\n\ntoo\tmany\tfields\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_labeled_corpus(tmp_path / "nope.tsv")

    def test_empty_corpus(self, tmp_path):
        with pytest.raises(CorpusError, match="empty"):
            load_labeled_corpus(write(tmp_path, "\n\n"))

    def test_empty_text_or_label(self, tmp_path):
        with pytest.raises(CorpusError):
            load_labeled_corpus(write(tmp_path, "  \tx\n"))
        with pytest.raises(CorpusError):
            load_labeled_corpus(write(tmp_path, "text\t\n"))

    def test_save_load_round_trip(self, tmp_path, two_class_corpus):
        path = tmp_path / "rt.tsv"
        two_class_corpus.save(path)
        assert load_labeled_corpus(path) == two_class_corpus


def balanced(n_per_label=50, labels=("p", "q")):
    return LabeledCorpus.from_pairs([(f"s{l}{i}", l) for l in labels for i in range(n_per_label)])


class TestSplit:
    def test_sizes_and_stratification(self):
        train, test = split_corpus(balanced(), 0.2, seed=7)
        assert (len(train), len(test)) == (80, 20)
        assert train.label_set == test.label_set == {"p", "q"}

    def test_deterministic(self):
        assert split_corpus(balanced(), 0.2, 7) == split_corpus(balanced(), 0.2, 7)

    def test_seed_matters(self):
        assert split_corpus(balanced(), 0.2, 7) != split_corpus(balanced(), 0.2, 8)

    def test_singleton_label_rejected(self):
        c = LabeledCorpus.from_pairs([("a", "p"), ("b", "p"), ("c", "lonely")])
        with pytest.raises(CorpusError, match="lonely"):
            split_corpus(c, 0.5, 0)

    @pytest.mark.parametrize("frac", [0.0, 1.0, -0.1, 1.5])
    def test_fraction_bounds(self, frac):
        with pytest.raises(ValueError):
            split_corpus(balanced(), frac, 0)

    @given(
        st.lists(st.tuples(st.sampled_from("abc"), st.integers(0, 4)), min_size=1, max_size=40),
        st.floats(0.05, 0.95),
        st.integers(0, 100),
    )
    @settings(max_examples=60)
    def test_recombination_is_exact(self, items, frac, seed):
        pairs = [(f"t{k}-{n}", lab) for k, (lab, n) in enumerate(items)]
        counts = Counter(lab for _, lab in pairs)
        pairs += [(f"extra-{lab}", lab) for lab, n in counts.items() if n < 2]
        corpus = LabeledCorpus.from_pairs(pairs)
        train, test = split_corpus(corpus, frac, seed)
        assert Counter(train.sentences) + Counter(test.sentences) == Counter(corpus.sentences)
        assert train.label_set == test.label_set == corpus.label_set


def encoded(pairs, vocab=None):
    corpus = LabeledCorpus.from_pairs(pairs)
    vocab = vocab or build_vocabulary([corpus])
    return encode_corpus(corpus, vocab), vocab


class TestBuildPairs:
    def setup_method(self):
        self.left, vocab = encoded([("aa", "pos"), ("bb", "neg"), ("ac", "pos")])
        self.right, _ = encoded([("ab", "pos"), ("ba", "neg"), ("ca", "pos"), ("cb", "neg")], vocab)

    def test_three_by_four(self):
        # each left sentence: 1 sampled positive + 1 sampled negative
        ds = build_pairs(self.left, self.right, negatives_per_positive=1, seed=0)
        assert (ds.positive_count, ds.negative_count) == (3, 3)
        for i in range(3):
            mine = [p for p in ds.pairs if p.left_id == i]
            assert sorted(p.y for p in mine) == [-1, 1]

    def test_labels_consistent(self):
        ds = build_pairs(self.left, self.right, 1, 0)
        for p in ds.pairs:
            assert (p.left_label == p.right_label) == (p.y == 1)
            assert p.right_label == self.right.labels[p.right_id]
            assert p.right is self.right.encodings[p.right_id]

    def test_deterministic(self):
        assert build_pairs(self.left, self.right, 1, 3) == build_pairs(self.left, self.right, 1, 3)

    def test_more_negatives_truncated_to_availability(self):
        ds = build_pairs(self.left, self.right, negatives_per_positive=5, seed=0)
        assert ds.negative_count == 3 * 2

    def test_positives_per_left(self):
        ds = build_pairs(self.left, self.right, 1, 0, positives_per_left=2)
        assert (ds.positive_count, ds.negative_count) == (6, 6)

    def test_single_label_right_rejected(self):
        right, _ = encoded([("ab", "pos"), ("ba", "pos")])
        with pytest.raises(CorpusError, match="single label"):
            build_pairs(self.left, right, 1, 0)

    def test_missing_left_label_rejected(self):
        right, _ = encoded([("ab", "pos"), ("ba", "other")])
        with pytest.raises(CorpusError, match="neg"):
            build_pairs(self.left, right, 1, 0)

    def test_bad_counts(self):
        with pytest.raises(ValueError):
            build_pairs(self.left, self.right, 0, 0)

    @given(st.integers(0, 1000), st.integers(1, 3), st.integers(1, 4))
    @settings(max_examples=40)
    def test_monolingual_never_self_pairs(self, seed, k, ppl):
        corpus, _ = encoded([(c * 3, "ab"[i % 2]) for i, c in enumerate("abcdefgh")])
        ds = build_pairs(corpus, corpus, k, seed, positives_per_left=ppl)
        assert ds.trainable
        assert all(p.left_id != p.right_id for p in ds.pairs)
        assert all((p.left_label == p.right_label) == (p.y == 1) for p in ds.pairs)

    def test_pair_label_validated(self):
        enc = self.left.encodings[0]
        with pytest.raises(ValueError):
            PairSample(enc, enc, 0)


class TestSynthetic:
    spec = {
        "a": SynthClassSpec("abc", 100, 10, 20),
        "b": SynthClassSpec("def", 100, 10, 20),
        "c": SynthClassSpec("ghi", 100, 10, 20),
    }

    def test_counts(self):
        c = generate_synthetic_corpus(self.spec, 0)
        assert len(c) == 300 and len(c.label_set) == 3
        assert all(10 <= len(s.text) <= 20 for s in c.sentences)

    def test_disjoint_alphabets_disjoint_trigrams(self):
        c = generate_synthetic_corpus(self.spec, 0)
        seen = {}
        for s in c.sentences:
            for tri in extract_trigrams(s.text):
                seen.setdefault(tri, set()).add(s.label)
        assert all(len(labels) == 1 for labels in seen.values())

    def test_deterministic(self):
        assert generate_synthetic_corpus(self.spec, 4) == generate_synthetic_corpus(self.spec, 4)

    def test_empty_alphabet(self):
        with pytest.raises(CorpusError):
            SynthClassSpec("", 10, 1, 2)

    def test_needs_two_classes(self):
        with pytest.raises(CorpusError):
            generate_synthetic_corpus({"a": self.spec["a"]}, 0)

    def test_noise(self):
        spec = {"a": SynthClassSpec("a", 50, 20, 20, "Z", 0.5), "b": SynthClassSpec("b", 50, 20, 20)}
        c = generate_synthetic_corpus(spec, 0)
        frac = sum(s.text.count("Z") for s in c.sentences if s.label == "a") / (50 * 20)
        assert 0.4 < frac < 0.6

    def test_spec_file(self, tmp_path):
        path = tmp_path / "s.ini"
        path.write_text(
            "[rich/pos]\nalphabet = abc\ncount = 3\nmin_length = 2\nmax_length = 4\n\n"
            "[rich/neg]\nalphabet = xyz\ncount = 2\nmin_length = 2\nmax_length = 4\nnoise = Q\nnoise_rate = 0.1\n\n"
            "[solo]\nalphabet = k\ncount = 1\nmin_length = 1\nmax_length = 1\n",
            encoding="utf-8",
        )
        spec = load_synth_spec(path)
        assert set(spec) == {"rich", "corpus"}
        assert spec["rich"]["neg"] == SynthClassSpec("xyz", 2, 2, 4, "Q", 0.1)

    def test_spec_file_missing_key(self, tmp_path):
        path = tmp_path / "s.ini"
        path.write_text("[x]\nalphabet = abc\n", encoding="utf-8")
        with pytest.raises(CorpusError, match="count"):
            load_synth_spec(path)

    def test_labeled_sentence_validation(self):
        with pytest.raises(CorpusError):
            LabeledSentence("  ", "x")
