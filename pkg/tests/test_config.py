import json

import pytest

from codetrace.config import (KNOWN_METHODS, ConfigError, PipelineConfig,
                              dump_config, load_config)


class TestDefaults:
    def test_empty_config_is_runnable(self):
        config = load_config()
        assert config.weighting == "tfidf"
        assert config.k == 64
        assert (config.lambda1, config.lambda2, config.lambda3) == \
            (1.0, 0.1, 0.2)
        assert config.alpha == 0.5
        assert config.methods == KNOWN_METHODS
        assert config.n_folds == 5
        config.validate()

    def test_hyper_mirrors_config(self):
        config = PipelineConfig(lambda3=0.9, k=8, eta=2e-3, max_iter=77,
                                tol=1e-4, seed=3, backtracking=True)
        hyper = config.hyper()
        assert hyper.lambda3 == 0.9
        assert hyper.k == 8
        assert hyper.eta == 2e-3
        assert hyper.max_iter == 77
        assert hyper.seed == 3
        assert hyper.backtracking

    def test_bundle_options_mirror_config(self):
        config = PipelineConfig(feature_min_docs=3, feature_max_docs=9,
                                weighting="count",
                                include_relationships=False)
        options = config.bundle_options()
        assert options.feature_min_docs == 3
        assert options.feature_max_docs == 9
        assert options.weighting == "count"
        assert not options.include_relationships


class TestValidate:
    @pytest.mark.parametrize("kw,msg", [
        (dict(weighting="binary"), "weighting must be 'tfidf' or 'count'"),
        (dict(alpha=1.2), r"alpha must be in \[0, 1\]"),
        (dict(lm_smoothing=0.0), r"lm_smoothing must be in \(0, 1\)"),
        (dict(feature_min_docs=0), "feature_min_docs must be >= 1"),
        (dict(feature_min_docs=5, feature_max_docs=4),
         "feature_max_docs below feature_min_docs"),
        (dict(lsi_k=0), "lsi_k must be >= 1"),
        (dict(n_folds=1), "n_folds must be >= 2"),
        (dict(methods=("cos", "bm25")), r"unknown methods \['bm25'\]"),
        (dict(eta=-1.0), "eta must be positive"),
        (dict(k=0), "k must be positive"),
    ])
    def test_rejections(self, kw, msg):
        with pytest.raises(ConfigError, match=msg):
            PipelineConfig(**kw).validate()


class TestLoadConfig:
    def test_file_values_applied(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"k": 8, "weighting": "count",
                                    "methods": ["cos", "lm"]}))
        config = load_config(path)
        assert config.k == 8
        assert config.weighting == "count"
        assert config.methods == ("cos", "lm")

    def test_overrides_beat_file(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"k": 8, "alpha": 0.9}))
        config = load_config(path, overrides={"k": 4})
        assert config.k == 4
        assert config.alpha == 0.9

    def test_unknown_file_key(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"lamda2": 0.5}))
        with pytest.raises(ConfigError, match=r"unknown keys: \['lamda2'\]"):
            load_config(path)

    def test_unknown_override_key(self):
        with pytest.raises(ConfigError, match="unknown config overrides"):
            load_config(overrides={"etaa": 1e-3})

    def test_bad_json(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_config(path)

    def test_non_object_json(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError, match="must be a JSON object"):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read config"):
            load_config(tmp_path / "absent.json")

    def test_methods_must_be_name_list(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"methods": "cos"}))
        with pytest.raises(ConfigError, match="list of method names"):
            load_config(path)

    def test_validation_runs_on_merged_result(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"alpha": 0.5}))
        with pytest.raises(ConfigError, match="alpha must be in"):
            load_config(path, overrides={"alpha": 2.0})


class TestDumpConfig:
    def test_round_trip(self, tmp_path):
        original = PipelineConfig(k=12, methods=("cos",), lambda2=0.0)
        path = tmp_path / "config.json"
        path.write_text(dump_config(original))
        assert load_config(path) == original

    def test_output_is_sorted_json(self):
        text = dump_config(PipelineConfig())
        payload = json.loads(text)
        assert list(payload) == sorted(payload)
        assert payload["methods"] == list(KNOWN_METHODS)
