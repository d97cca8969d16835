import pytest

from codetrace.corpus import corpus_fingerprint, ingest_corpus, load_queries
from codetrace.profiles import JAVA_PROFILE
from codetrace.synthetic import (WORD_POOL, PlantedCorpus, PlantedSpec,
                                 experiment_hyper, generate_planted,
                                 planted_bundle, run_planted_experiment,
                                 split_indices, write_tree)
from codetrace.text import ENGLISH_STOP_WORDS, tokenize_text

SMALL = PlantedSpec(n_signal_topics=3, n_crossmodal_topics=2, bridge_docs=2,
                    signal_docs=2, crossmodal_docs=2, distractor_docs=1,
                    glossary_docs=1, seed=0)


class TestWordPool:
    def test_pool_is_clean(self):
        assert len(set(WORD_POOL)) == len(WORD_POOL) == 96
        for word in WORD_POOL:
            assert tokenize_text(word) == {word: 1}
            assert word not in ENGLISH_STOP_WORDS
            assert word not in JAVA_PROFILE.keywords


class TestGenerate:
    def test_default_shape(self):
        corpus = generate_planted(PlantedSpec())
        # 12 signal topics * (2 + 3) + 4 cross-modal * (3 + 2 + 2)
        assert len(corpus.documents) == 88
        assert len(corpus.queries) == 16
        assert len(corpus.training_ids) == 32
        assert len(corpus.all_labels) == 24
        assert len(corpus.snippet_only_labels) == 12

    def test_documents_sorted_with_distractors_first(self):
        corpus = generate_planted(PlantedSpec())
        ids = [doc.id for doc in corpus.documents]
        assert ids == sorted(ids)
        prefixes = [doc_id.split("/")[0] for doc_id in ids]
        assert prefixes.index("dis") < prefixes.index("gls") \
            < prefixes.index("ref") < prefixes.index("sig")

    def test_deterministic_per_seed(self):
        a = generate_planted(PlantedSpec(seed=3))
        b = generate_planted(PlantedSpec(seed=3))
        c = generate_planted(PlantedSpec(seed=4))
        assert corpus_fingerprint(a.documents) == \
            corpus_fingerprint(b.documents)
        assert corpus_fingerprint(a.documents) != \
            corpus_fingerprint(c.documents)
        assert [q.text for q in a.queries] == [q.text for q in b.queries]
        assert [q.text for q in a.queries] != [q.text for q in c.queries]

    def test_signal_test_docs_share_no_words_with_their_query(self):
        # the planted margin rests on this: text rankers cannot see the
        # signal test documents at all
        corpus = generate_planted(PlantedSpec())
        by_label = {}
        for doc in corpus.documents:
            by_label.setdefault(doc.label, []).append(doc)
        for query in corpus.queries:
            if query.label not in corpus.snippet_only_labels:
                continue
            for doc in by_label[query.label]:
                if doc.id in corpus.training_ids:
                    assert set(query.tokens) <= set(doc.tokens)
                else:
                    assert not set(query.tokens) & set(doc.tokens)

    def test_blocks_contribute_only_inert_tokens(self):
        # the opaque call names vanish entirely; the one surviving block
        # word is the method name "run", which no query ever uses
        corpus = generate_planted(SMALL)
        query_words = {w for q in corpus.queries for w in q.tokens}
        assert "run" not in query_words
        test_docs = [doc for doc in corpus.documents
                     if doc.id.startswith("sig")
                     and doc.id not in corpus.training_ids]
        for doc in test_docs:
            filler_line = doc.source.splitlines()[0]
            assert set(doc.tokens) - {"run"} == \
                set(tokenize_text(filler_line[3:]))

    def test_crossmodal_reference_absent_from_training(self):
        corpus = generate_planted(PlantedSpec())
        for doc in corpus.documents:
            if doc.id in corpus.training_ids:
                assert "import " not in doc.source

    def test_crossmodal_docs_import_the_query_words(self):
        corpus = generate_planted(PlantedSpec())
        queries = {q.label: q for q in corpus.queries}
        for doc in corpus.documents:
            if not doc.id.startswith("ref"):
                continue
            query = queries[doc.label]
            w1, w2, w3 = sorted(query.tokens)
            for word in (w1, w2, w3):
                assert f"import " in doc.source
                assert word in doc.source.lower()

    def test_distractors_outweigh_everything_on_text(self):
        corpus = generate_planted(PlantedSpec())
        queries = {q.label.replace("cross", "noise"): q
                   for q in corpus.queries if q.label.startswith("cross")}
        for doc in corpus.documents:
            if not doc.id.startswith("dis"):
                continue
            query = queries[doc.label]
            for word in query.tokens:
                assert doc.tokens[word] == 3

    def test_pool_exhaustion_rejected(self):
        with pytest.raises(ValueError, match="pool has 96"):
            generate_planted(PlantedSpec(n_signal_topics=20))


class TestWriteTree:
    def test_round_trip_through_ingestion(self, tmp_path):
        corpus = generate_planted(SMALL)
        write_tree(corpus, tmp_path)
        from codetrace.corpus import load_manifest
        manifest = load_manifest(tmp_path / "manifest.tsv")
        documents, report = ingest_corpus(tmp_path, JAVA_PROFILE,
                                          label_rule="manifest",
                                          manifest=manifest)
        assert corpus_fingerprint(documents) == \
            corpus_fingerprint(corpus.documents)
        assert [d.label for d in documents] == \
            [d.label for d in corpus.documents]
        assert report.skipped == []

    def test_queries_file_loadable(self, tmp_path):
        corpus = generate_planted(SMALL)
        write_tree(corpus, tmp_path)
        queries = load_queries(tmp_path / "queries.tsv", require_labels=True)
        assert [q.id for q in queries] == [q.id for q in corpus.queries]
        assert [q.tokens for q in queries] == \
            [q.tokens for q in corpus.queries]
        assert [q.label for q in queries] == \
            [q.label for q in corpus.queries]


class TestBundleShape:
    def test_default_matrix_dimensions(self):
        corpus, bundle = planted_bundle(PlantedSpec())
        assert bundle.X.shape == (111, 88)
        assert bundle.Y.shape == (56, 88)
        assert bundle.R.shape == (111, 56)

    def test_split_indices_partition(self):
        corpus, bundle = planted_bundle(PlantedSpec())
        train_idx, candidate_idx = split_indices(corpus, bundle)
        assert len(train_idx) == 32
        assert len(candidate_idx) == 56
        assert not set(train_idx) & set(candidate_idx)
        assert {bundle.doc_ids[j] for j in train_idx} == corpus.training_ids

    def test_experiment_hyper_carries_seed(self):
        assert experiment_hyper(7).seed == 7
        assert experiment_hyper().k == 16
        assert experiment_hyper().backtracking


class TestExperiment:
    def test_seed_zero_frozen_results(self):
        results = run_planted_experiment(seed=0,
                                         method_names=("cos", "codetrace"))
        assert results["cos"] == pytest.approx(0.1483892062801171, abs=1e-12)
        assert results["codetrace"] == pytest.approx(1.0, abs=1e-12)

    def test_margin_present_on_second_seed(self):
        results = run_planted_experiment(seed=1,
                                         method_names=("cos", "codetrace"))
        assert results["codetrace"] - results["cos"] >= 0.10
