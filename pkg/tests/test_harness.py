"""CLI pipeline: config handling, exit codes, report files, determinism."""

import json

import pytest

from textseg.corpus import parse_corpus, write_corpus
from textseg.harness import load_run_config, main
from textseg.scorer import load_model, read_external_probs
from textseg.synth import SynthConfig, generate_corpus


@pytest.fixture(scope="module")
def corpus_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "corpus.jsonl"
    docs = generate_corpus(SynthConfig(num_docs=20, num_groups=4), seed=13)
    write_corpus(docs, path)
    return path


@pytest.fixture(scope="module")
def run_config(tmp_path_factory, corpus_path):
    path = tmp_path_factory.mktemp("cfg") / "run.json"
    cfg = {
        "corpus": str(corpus_path),
        "seed": 13,
        "pairs": {"hard_negatives_per_doc": 0},
        "train": {"max_epochs": 3, "patience": 3, "seed": 13},
    }
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return path


@pytest.fixture(scope="module")
def trained_model(tmp_path_factory, run_config):
    out = tmp_path_factory.mktemp("model")
    assert main(["train", "--config", str(run_config), "--out", str(out)]) == 0
    return out / "model.json"


def with_model(run_config, trained_model, tmp_path, name="run_model.json", **extra):
    cfg = json.loads(run_config.read_text(encoding="utf-8"))
    cfg["model_path"] = str(trained_model)
    cfg.update(extra)
    path = tmp_path / name
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return path


class TestConfigHandling:
    def test_missing_config_file_is_io_error(self):
        assert main(["ingest", "--config", "/nonexistent/run.json"]) == 2

    def test_invalid_json_is_validation_error(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json", encoding="utf-8")
        assert main(["ingest", "--config", str(path)]) == 1

    def test_unknown_top_level_key_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"corpus": "x.jsonl", "typo_key": 1}), encoding="utf-8")
        assert main(["ingest", "--config", str(path)]) == 1

    def test_unknown_section_key_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(
            json.dumps({"corpus": "x.jsonl", "train": {"lr": 0.1}}), encoding="utf-8"
        )
        assert main(["ingest", "--config", str(path)]) == 1

    def test_unknown_subcommand_usage_error(self):
        assert main(["frobnicate"]) == 1

    def test_unknown_system_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"corpus": "x.jsonl", "system": "magic"}), encoding="utf-8")
        assert main(["ingest", "--config", str(path)]) == 1

    def test_missing_corpus_file_is_io_error(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"corpus": str(tmp_path / "gone.jsonl")}), encoding="utf-8")
        assert main(["ingest", "--config", str(path)]) == 2

    def test_seed_and_out_overrides(self, run_config, tmp_path):
        cfg = load_run_config(str(run_config), seed_override=99, out_override=str(tmp_path / "x"))
        assert cfg.seed == 99
        assert cfg.out_dir == str(tmp_path / "x")

    def test_train_seed_follows_run_seed_unless_set(self, tmp_path, corpus_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"corpus": str(corpus_path), "seed": 42}), encoding="utf-8")
        cfg = load_run_config(str(path), None, None)
        assert cfg.train.seed == 42

    def test_texttiling_stemmer_not_configurable(self, tmp_path, corpus_path):
        path = tmp_path / "run.json"
        path.write_text(
            json.dumps({"corpus": str(corpus_path), "texttiling": {"stemmer": "s"}}),
            encoding="utf-8",
        )
        assert main(["ingest", "--config", str(path)]) == 1


class TestIngest:
    def test_outputs(self, run_config, tmp_path):
        out = tmp_path / "ing"
        assert main(["ingest", "--config", str(run_config), "--out", str(out)]) == 0
        docs = parse_corpus(out / "corpus.jsonl")
        assert len(docs) == 20
        summary = json.loads((out / "ingest_summary.json").read_text(encoding="utf-8"))
        assert summary["num_docs"] == 20
        assert summary["num_gaps"] == sum(d.n - 1 for d in docs)
        manifest = json.loads((out / "run_manifest.json").read_text(encoding="utf-8"))
        assert manifest["command"] == "ingest"
        assert "inputs" in manifest and "seed" in manifest


class TestPairs:
    def test_outputs(self, run_config, tmp_path):
        out = tmp_path / "prs"
        assert main(["pairs", "--config", str(run_config), "--out", str(out)]) == 0
        summary = json.loads((out / "pairs_summary.json").read_text(encoding="utf-8"))
        assert summary["num_pairs"] > 0
        assert summary["by_kind"].keys() <= {"intra", "inter", "hard"}
        lines = (out / "pairs.jsonl").read_text(encoding="utf-8").splitlines()
        assert len(lines) == summary["num_pairs"]


class TestTrainScore:
    def test_model_loads(self, trained_model):
        model = load_model(trained_model)
        assert model.version == 1

    def test_train_log_structure(self, trained_model):
        log = json.loads(
            (trained_model.parent / "train_log.json").read_text(encoding="utf-8")
        )
        assert log["best_epoch"] >= 1
        assert len(log["epochs"]) <= 3

    def test_score_covers_corpus(self, run_config, trained_model, tmp_path, corpus_path):
        cfg_path = with_model(run_config, trained_model, tmp_path)
        out = tmp_path / "sc"
        assert main(["score", "--config", str(cfg_path), "--out", str(out)]) == 0
        docs = parse_corpus(corpus_path)
        by_doc = read_external_probs(out / "probs.jsonl", docs)
        assert set(by_doc) == {d.doc_id for d in docs}


class TestSegmentTuneEval:
    def test_segment_masses_partition(self, run_config, trained_model, tmp_path, corpus_path):
        cfg_path = with_model(run_config, trained_model, tmp_path)
        out = tmp_path / "seg"
        assert main(["segment", "--config", str(cfg_path), "--out", str(out)]) == 0
        docs = {d.doc_id: d for d in parse_corpus(corpus_path)}
        for line in (out / "segments.jsonl").read_text(encoding="utf-8").splitlines():
            obj = json.loads(line)
            assert sum(obj["masses"]) == docs[obj["doc_id"]].n
            assert all(m >= 1 for m in obj["masses"])

    def test_tune_outputs(self, run_config, trained_model, tmp_path):
        cfg_path = with_model(run_config, trained_model, tmp_path)
        out = tmp_path / "tun"
        assert main(["tune", "--config", str(cfg_path), "--out", str(out)]) == 0
        tuned = json.loads((out / "tuned.json").read_text(encoding="utf-8"))
        assert 0.05 <= tuned["tau_star"] <= 0.95
        sweep = (out / "sweep.csv").read_text(encoding="utf-8").splitlines()
        assert sweep[0] == "tau,macro_bf1,macro_pk,macro_wd,mean_boundaries_per_doc"
        assert len(sweep) == 1 + tuned["grid_size"]

    def test_eval_report_files(self, run_config, trained_model, tmp_path):
        cfg_path = with_model(run_config, trained_model, tmp_path)
        out = tmp_path / "ev"
        assert main(["eval", "--config", str(cfg_path), "--out", str(out)]) == 0
        for name in (
            "metrics.csv",
            "macro.csv",
            "macro.md",
            "sweep.csv",
            "prob_hist.csv",
            "analysis.json",
            "positional.csv",
            "groups.csv",
            "run_manifest.json",
        ):
            assert (out / name).exists(), name
        header = (out / "metrics.csv").read_text(encoding="utf-8").splitlines()[0]
        assert header.startswith("doc_id,")

    def test_eval_texttiling_has_no_prob_reports(
        self, run_config, trained_model, tmp_path
    ):
        cfg_path = with_model(run_config, trained_model, tmp_path, system="texttiling")
        out = tmp_path / "evtt"
        assert main(["eval", "--config", str(cfg_path), "--out", str(out)]) == 0
        assert (out / "macro.csv").exists()
        assert not (out / "sweep.csv").exists()
        assert not (out / "prob_hist.csv").exists()

    def test_analyze_outputs(self, run_config, trained_model, tmp_path):
        cfg_path = with_model(run_config, trained_model, tmp_path)
        out = tmp_path / "anl"
        assert main(["analyze", "--config", str(cfg_path), "--out", str(out)]) == 0
        analysis = json.loads((out / "analysis.json").read_text(encoding="utf-8"))
        assert analysis["num_gaps"] > 0
        assert 0.0 <= analysis["overlap_fraction"] <= 1.0
        hist = (out / "prob_hist.csv").read_text(encoding="utf-8").splitlines()
        assert len(hist) == 1 + 50
        counts = [int(r.split(",")[-1]) for r in hist[1:]]
        assert sum(counts) == analysis["num_gaps"]


class TestExternalProbsSystem:
    def test_external_flow(self, run_config, trained_model, tmp_path, corpus_path):
        # Score with the model, then re-evaluate those numbers as external.
        cfg_path = with_model(run_config, trained_model, tmp_path)
        score_out = tmp_path / "sc2"
        assert main(["score", "--config", str(cfg_path), "--out", str(score_out)]) == 0
        ext_cfg = with_model(
            run_config,
            trained_model,
            tmp_path,
            name="run_ext.json",
            system="external_probs",
            external_probs=str(score_out / "probs.jsonl"),
        )
        out = tmp_path / "eve"
        assert main(["eval", "--config", str(ext_cfg), "--out", str(out)]) == 0
        assert (out / "macro.csv").exists()

    def test_incomplete_external_rejected(self, run_config, trained_model, tmp_path):
        cfg_path = with_model(run_config, trained_model, tmp_path)
        score_out = tmp_path / "sc3"
        assert main(["score", "--config", str(cfg_path), "--out", str(score_out)]) == 0
        lines = (score_out / "probs.jsonl").read_text(encoding="utf-8").splitlines()
        (score_out / "partial.jsonl").write_text(
            "\n".join(lines[:-1]) + "\n", encoding="utf-8"
        )
        bad_cfg = with_model(
            run_config,
            trained_model,
            tmp_path,
            name="run_bad.json",
            system="external_probs",
            external_probs=str(score_out / "partial.jsonl"),
        )
        assert main(["eval", "--config", str(bad_cfg), "--out", str(tmp_path / "evx")]) == 1


class TestDeterminism:
    def test_eval_csvs_identical(self, run_config, trained_model, tmp_path):
        cfg_path = with_model(run_config, trained_model, tmp_path)
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert main(["eval", "--config", str(cfg_path), "--out", str(out_a)]) == 0
        assert main(["eval", "--config", str(cfg_path), "--out", str(out_b)]) == 0
        for name in ("metrics.csv", "macro.csv", "sweep.csv", "prob_hist.csv",
                     "positional.csv", "groups.csv"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name


class TestCrossValidation:
    def test_fold_structure(self, run_config, tmp_path):
        out = tmp_path / "cv"
        assert main(["cv", "--config", str(run_config), "--out", str(out)]) == 0
        summary = (out / "cv_summary.csv").read_text(encoding="utf-8").splitlines()
        assert summary[0] == "metric,g0,g1,g2,g3,mean"
        assert [r.split(",")[0] for r in summary[1:]] == ["bf1", "b", "pk", "wd"]
        for g in ("g0", "g1", "g2", "g3"):
            assert (out / f"fold_{g}" / "macro.csv").exists()
        manifest = json.loads((out / "run_manifest.json").read_text(encoding="utf-8"))
        assert set(manifest["tau_star_by_fold"]) == {"g0", "g1", "g2", "g3"}

    def test_group_folds_split_type_directed_to_cv(self, tmp_path, corpus_path):
        path = tmp_path / "run.json"
        path.write_text(
            json.dumps({"corpus": str(corpus_path), "split": {"type": "group_folds"}}),
            encoding="utf-8",
        )
        assert main(["eval", "--config", str(path), "--out", str(tmp_path / "o")]) == 1
