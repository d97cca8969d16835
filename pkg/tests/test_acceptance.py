"""Release gate: nine numbered checks covering the whole engine.

Each test prints one summary line with the measured margin and elapsed
time (visible under -s); pytest -v gives the pass/fail line per check.
"""
import math
import time
from collections import Counter
from dataclasses import replace

import numpy as np
import pytest

from codetrace.blocks import (build_block_tree, normalize_statement,
                              serialize_node)
from codetrace.cli import main
from codetrace.corpus import CodeDocument
from codetrace.features import (build_content_matrix, extract_relationships,
                                extract_snippets)
from codetrace.learning import (Hyperparams, TrainingData, cfa_init,
                                find_decreasing_step, grad_U, grad_V,
                                pull_loss, total_loss, train)
from codetrace.metrics import ndcg_at_p, precision_at_n, recall_at_n
from codetrace.profiles import JAVA_PROFILE
from codetrace.synthetic import (PlantedSpec, content_weight_sweep,
                                 planted_bundle, run_planted_experiment,
                                 split_indices)
from codetrace.text import extract_tokens, split_words, tokenize_text
from codetrace.vectorize import (FeatureIndex, Vocabulary, build_label_graph)

from conftest import CORPUS_ROOT, MANIFEST, QUERIES, random_instance, random_uv

LAMBDA_PATTERNS = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0),
                   (1.0, 1.0, 1.0))


def central_difference(f, M, h=1e-6):
    grad = np.zeros_like(M)
    for idx in np.ndindex(*M.shape):
        kept = M[idx]
        M[idx] = kept + h
        above = f()
        M[idx] = kept - h
        below = f()
        M[idx] = kept
        grad[idx] = (above - below) / (2.0 * h)
    return grad


def test_1_gradients_match_central_differences():
    start = time.perf_counter()
    rng = np.random.default_rng(12)
    worst = 0.0
    for _ in range(20):
        data = random_instance(rng)
        k = int(rng.integers(1, 5))
        U, V = random_uv(rng, data, k)
        for lambda1, lambda2, lambda3 in LAMBDA_PATTERNS:
            hyper = Hyperparams(lambda1=lambda1, lambda2=lambda2,
                                lambda3=lambda3, k=k)
            objective = lambda: total_loss(U, V, data, hyper).total
            for analytic, M in ((grad_U(U, V, data, hyper), U),
                                (grad_V(U, V, data, hyper), V)):
                numeric = central_difference(objective, M)
                err = (np.linalg.norm(analytic - numeric)
                       / max(np.linalg.norm(numeric), 1e-12))
                worst = max(worst, err)
                assert err < 1e-5
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    print(f"[1/9] gradients match central differences: pass "
          f"(worst rel err {worst:.2e}, {elapsed:.1f}s)")


def test_2_label_graph_spectrum_and_block_structure():
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    for _ in range(50):
        m = int(rng.integers(1, 21))
        labels = [str(rng.integers(0, 5)) for _ in range(m)]
        graph = build_label_graph(labels)
        L = graph.laplacian
        assert np.array_equal(L, L.T)
        eigenvalues = np.linalg.eigvalsh(L)
        assert eigenvalues[0] >= -1e-9
        assert eigenvalues[-1] <= 2.0 + 1e-9
        rebuilt = np.block([[graph.lxx, graph.lxy],
                            [graph.lyx, graph.lyy]])
        assert np.array_equal(rebuilt, L)
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0
    print(f"[2/9] label graph symmetric, PSD, spectrum <= 2, blocks exact: "
          f"pass ({elapsed:.1f}s)")


@pytest.mark.filterwarnings("ignore:cross matrix rank")
def test_3_descent_halves_planted_corpus_loss():
    start = time.perf_counter()
    spec = PlantedSpec(4, 2, 2, 2, 3, 2, 2, seed=0)
    corpus, bundle = planted_bundle(spec)
    assert len(bundle.doc_ids) == 30
    train_idx, _ = split_indices(corpus, bundle)
    labels = [bundle.labels[j] for j in train_idx]
    data = TrainingData(X=bundle.X[:, train_idx], Y=bundle.Y[:, train_idx],
                        R=bundle.R, graph=build_label_graph(labels))
    base = Hyperparams(k=8, tol=0.0, max_iter=500)
    eta = find_decreasing_step(data, base)
    model = train(data, replace(base, eta=eta))
    totals = [model.initial_loss.total] + [row.total for row in model.trace]
    for earlier, later in zip(totals[2:], totals[3:]):
        assert later <= earlier + 1e-12 * abs(earlier)
    assert totals[-1] < 0.5 * totals[0]
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0
    print(f"[3/9] descent on a 30-doc planted corpus more than halves the "
          f"loss: pass (eta={eta:g}, {totals[0]:.3f} -> {totals[-1]:.3f}, "
          f"{elapsed:.1f}s)")


def test_4_factor_start_beats_random_orthonormal_pairs():
    start = time.perf_counter()
    rng = np.random.default_rng(41)
    margin = np.inf
    for _ in range(10):
        d = int(rng.integers(3, 7))
        m = d + 3
        X = rng.standard_normal((d, m))
        Y = rng.standard_normal((d, m))
        U, V = cfa_init(X, Y, d)
        ours = pull_loss(U, V, X, Y)
        for _ in range(50):
            Qu = np.linalg.qr(rng.standard_normal((d, d)))[0]
            Qv = np.linalg.qr(rng.standard_normal((d, d)))[0]
            theirs = pull_loss(Qu, Qv, X, Y)
            margin = min(margin, theirs - ours)
            assert ours <= theirs + 1e-9
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    print(f"[4/9] factor-analysis start beats 500 random orthonormal "
          f"pairs: pass (worst margin {margin:.2e}, {elapsed:.1f}s)")


def test_5_ranking_metrics_match_brute_force():
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    docs = [f"doc{i:02d}" for i in range(30)]
    for _ in range(200):
        size = int(rng.integers(1, len(docs) + 1))
        ranked = [str(d) for d in rng.permutation(docs[:size])]
        n_rel = int(rng.integers(1, size + 1))
        relevant = {str(d) for d in rng.choice(ranked, size=n_rel,
                                               replace=False)}
        cutoff = int(rng.integers(1, size + 2))
        hits = sum(1 for d in ranked[:cutoff] if d in relevant)
        assert precision_at_n(ranked, relevant, cutoff) == hits / cutoff
        assert recall_at_n(ranked, relevant, cutoff) == hits / len(relevant)
        # float products of the two sides can differ in the last ulp, so
        # the shared integer hit count carries the counting identity
        recovered_p = precision_at_n(ranked, relevant, cutoff) * cutoff
        recovered_r = recall_at_n(ranked, relevant, cutoff) * len(relevant)
        assert round(recovered_p) == round(recovered_r) == hits
        dcg = sum((1.0 if d in relevant else 0.0)
                  / (1.0 if i == 1 else math.log2(i))
                  for i, d in enumerate(ranked[:cutoff], start=1))
        ideal = sum(1.0 / (1.0 if i == 1 else math.log2(i))
                    for i in range(1, min(len(relevant), cutoff) + 1))
        assert ndcg_at_p(ranked, relevant, cutoff) == \
            pytest.approx(dcg / ideal, abs=1e-12)
        best_first = sorted(ranked, key=lambda d: d not in relevant)
        assert ndcg_at_p(best_first, relevant, cutoff) == 1.0
    elapsed = time.perf_counter() - start
    print(f"[5/9] ranking metrics match brute force on 200 rankings: pass "
          f"({elapsed:.1f}s)")


def test_6_planted_signal_margins_over_text_baselines():
    start = time.perf_counter()
    runs = [run_planted_experiment(seed, ("cos", "cfa", "cfa_cr",
                                          "codetrace"))
            for seed in range(5)]
    means = {name: float(np.mean([run[name] for run in runs]))
             for name in runs[0]}
    full_margin = means["codetrace"] - means["cos"]
    content_margin = means["cfa_cr"] - means["cfa"]
    assert full_margin >= 0.10
    assert content_margin >= 0.02
    elapsed = time.perf_counter() - start
    assert elapsed < 300.0
    print(f"[6/9] planted-signal margins over 5 seeds: pass "
          f"(full vs cos +{full_margin:.4f}, content reg +"
          f"{content_margin:.4f}, {elapsed:.1f}s)")


def test_7_zero_content_weight_strictly_hurts():
    start = time.perf_counter()
    curve = content_weight_sweep(seed=0)
    best_elsewhere = max(value for weight, value in curve.items()
                         if weight != 0.0)
    assert curve[0.0] < best_elsewhere
    elapsed = time.perf_counter() - start
    print(f"[7/9] zero content weight strictly below the best weight: pass "
          f"({curve[0.0]:.4f} < {best_elsewhere:.4f}, {elapsed:.1f}s)")


def test_8_pipeline_byte_identical_across_runs(tmp_path, capsys):
    start = time.perf_counter()
    outputs = []
    for run_name in ("first", "second"):
        out = tmp_path / run_name
        common = ["--corpus-root", CORPUS_ROOT, "--manifest", MANIFEST,
                  "--output-dir", str(out)]
        assert main(["index", *common]) == 0
        assert main(["train", *common, "--k", "2", "--eta", "0.01",
                     "--max-iter", "80"]) == 0
        assert main(["eval", *common, "--query-file", QUERIES,
                     "--methods", "cos,codetrace", "--k", "2",
                     "--eta", "0.01", "--max-iter", "60",
                     "--n-folds", "2"]) == 0
        outputs.append(out)
    capsys.readouterr()
    first, second = outputs
    names = sorted(p.name for p in first.iterdir())
    assert names == sorted(p.name for p in second.iterdir())
    for name in names:
        assert (first / name).read_bytes() == \
            (second / name).read_bytes(), name
    elapsed = time.perf_counter() - start
    print(f"[8/9] index/train/eval byte-identical across two runs: pass "
          f"({len(names)} artifacts, {elapsed:.1f}s)")


def _doc(source: str) -> CodeDocument:
    return CodeDocument(id="d", path="d", source=source,
                        tokens=extract_tokens(source, JAVA_PROFILE),
                        label="d")


def test_9_hand_traced_fixtures_exact():
    assert split_words("maxRetryCount") == ["max", "retry", "count"]
    assert split_words("java.io.IOException") == \
        ["java", "io", "io", "exception"]
    assert split_words("grid_2d") == ["grid"]
    assert split_words("sha256sum") == ["sha", "256", "sum"]
    assert tokenize_text("to be or not to be") == Counter()
    assert tokenize_text("click click handler") == \
        Counter({"click": 2, "handler": 1})

    assert normalize_statement("int maxRetry = 5;", JAVA_PROFILE) == \
        "int <id:int> = <num>"
    tree = build_block_tree("a; { b; { c; } d; }", JAVA_PROFILE)
    assert tree.root.statements == ["a"]
    (child,) = tree.root.children
    assert child.statements == ["b", "d"]
    (grand,) = child.children
    assert grand.statements == ["c"]
    assert serialize_node(tree.root) == "a ; { b ; { c } ; d }"

    _, counts = extract_relationships(_doc("import java.io.IOException;\n"),
                                      JAVA_PROFILE)
    assert counts == Counter({"refs:java.io.ioexception": 2})
    _, counts = extract_relationships(
        _doc("class A extends B implements C { }"), JAVA_PROFILE)
    assert counts == Counter({"inherits:b": 1, "implements:c": 1})

    found, _, _ = extract_snippets(_doc("render(); { frameCount = 0; }"),
                                   JAVA_PROFILE)
    features = {f.key: f for f in found}
    assert set(features) == {"frameCount = <num>",
                             "render ( ) ; { frameCount = <num> }"}
    vocab = Vocabulary(["count", "frame", "render"])
    index = FeatureIndex(features)
    R = build_content_matrix(vocab, index, features)
    assert np.array_equal(R, np.array([[1.0, 0.0],
                                       [1.0, 0.0],
                                       [0.0, 1.0]]))

    graph = build_label_graph(["a"])
    assert np.array_equal(graph.W, np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.array_equal(graph.laplacian,
                          np.array([[1.0, -1.0], [-1.0, 1.0]]))
    print("[9/9] hand-traced tokenizer, block, relationship, content and "
          "graph fixtures: pass")
