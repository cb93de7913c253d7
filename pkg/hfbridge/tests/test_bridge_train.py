"""Fine-tune smoke run, manifest contract, checkpoint round-trip, CLI."""

from __future__ import annotations

import json
import logging

import pytest

from hfbridge import (
    BridgeConfig,
    BridgeError,
    export_probs,
    load_checkpoint,
    read_corpus,
    train_nsp,
)
from hfbridge.cli import main
from hfbridge.train import MANIFEST_FILE

MANIFEST_KEYS = {
    "model_ref",
    "config",
    "seed",
    "n_pairs",
    "n_val_docs",
    "truncated_pairs",
    "epochs_run",
    "best_epoch",
    "best_val_bf1",
    "initial_train_loss",
    "final_train_loss",
    "epochs",
    "backend",
}


class TestSmokeRun:
    def test_one_epoch_reduces_training_loss(self, smoke_run):
        manifest, _ = smoke_run
        assert manifest["final_train_loss"] < manifest["initial_train_loss"]

    def test_manifest_contract(self, smoke_run):
        manifest, out = smoke_run
        assert set(manifest) == MANIFEST_KEYS
        assert manifest["n_pairs"] == 200
        assert manifest["n_val_docs"] == 3
        assert manifest["epochs_run"] == 1
        assert manifest["best_epoch"] == 1
        assert len(manifest["epochs"]) == 1
        row = manifest["epochs"][0]
        assert set(row) == {"epoch", "train_loss", "val_bf1"}
        assert manifest["best_val_bf1"] == row["val_bf1"]
        assert 0.0 <= manifest["best_val_bf1"] <= 1.0
        assert manifest["config"]["max_epochs"] == 1
        assert manifest["config"]["loss"]["focal_gamma"] == 1.5

    def test_manifest_written_to_disk(self, smoke_run):
        manifest, out = smoke_run
        on_disk = json.loads((out / MANIFEST_FILE).read_text(encoding="utf-8"))
        assert on_disk == manifest

    def test_checkpoint_files_present(self, smoke_run):
        _, out = smoke_run
        for name in ("config.json", "model.safetensors", "tokenizer.json", "nsp_head.pt"):
            assert (out / name).exists(), name

    def test_checkpoint_roundtrip_scores_gaps(self, smoke_run, wire_dir):
        _, out = smoke_run
        scorer, tokenizer = load_checkpoint(out)
        docs = read_corpus(wire_dir / "val.jsonl")
        cfg = BridgeConfig(model_ref=str(out), max_seq_length=96)
        probs = export_probs(scorer, tokenizer, docs, cfg)
        for doc in docs:
            assert len(probs[doc.doc_id]) == doc.n - 1
            assert all(0.0 <= p <= 1.0 for p in probs[doc.doc_id])


class TestTrainValidation:
    def test_truncation_counted_and_warned(self, encoder_dir, wire_dir, tmp_path, caplog):
        lines = (wire_dir / "pairs.jsonl").read_text(encoding="utf-8").splitlines()[:8]
        small = tmp_path / "small_pairs.jsonl"
        small.write_text("\n".join(lines) + "\n", encoding="utf-8")
        cfg = BridgeConfig(
            model_ref=encoder_dir,
            learning_rate=1e-4,
            batch_size=8,
            max_epochs=1,
            max_seq_length=8,
            seed=0,
        )
        with caplog.at_level(logging.WARNING, logger="hfbridge.train"):
            manifest = train_nsp(small, wire_dir / "val.jsonl", cfg, tmp_path / "run")
        assert manifest["truncated_pairs"] == 8
        assert any("truncated" in rec.getMessage() for rec in caplog.records)

    def test_empty_pairs_file_rejected(self, encoder_dir, wire_dir, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("", encoding="utf-8")
        cfg = BridgeConfig(model_ref=encoder_dir, max_epochs=1)
        with pytest.raises(BridgeError):
            train_nsp(empty, wire_dir / "val.jsonl", cfg, tmp_path / "run")

    def test_unavailable_model_ref_rejected(self, wire_dir, tmp_path):
        cfg = BridgeConfig(model_ref=str(tmp_path / "no_such_model"), max_epochs=1)
        with pytest.raises(BridgeError, match="unavailable"):
            train_nsp(wire_dir / "pairs.jsonl", wire_dir / "val.jsonl", cfg, tmp_path / "run")


class TestCli:
    def test_export_succeeds(self, smoke_run, wire_dir, tmp_path, capsys):
        _, ckpt = smoke_run
        dest = tmp_path / "probs.jsonl"
        rc = main(
            [
                "export",
                "--checkpoint", str(ckpt),
                "--corpus", str(wire_dir / "ten.jsonl"),
                "--out", str(dest),
                "--max-seq-len", "96",
            ]
        )
        assert rc == 0
        assert dest.exists()
        assert "gap probabilities" in capsys.readouterr().out

    def test_missing_pairs_file_exits_2(self, encoder_dir, wire_dir, tmp_path):
        rc = main(
            [
                "train",
                "--pairs", str(tmp_path / "missing.jsonl"),
                "--val-corpus", str(wire_dir / "val.jsonl"),
                "--model", encoder_dir,
                "--out", str(tmp_path / "run"),
            ]
        )
        assert rc == 2

    def test_invalid_epochs_exits_1(self, encoder_dir, wire_dir, tmp_path):
        rc = main(
            [
                "train",
                "--pairs", str(wire_dir / "pairs.jsonl"),
                "--val-corpus", str(wire_dir / "val.jsonl"),
                "--model", encoder_dir,
                "--out", str(tmp_path / "run"),
                "--epochs", "0",
            ]
        )
        assert rc == 1

    def test_malformed_pairs_exits_1(self, encoder_dir, wire_dir, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"doc_id": "x"\n', encoding="utf-8")
        rc = main(
            [
                "train",
                "--pairs", str(bad),
                "--val-corpus", str(wire_dir / "val.jsonl"),
                "--model", encoder_dir,
                "--out", str(tmp_path / "run"),
            ]
        )
        assert rc == 1

    def test_unknown_subcommand_exits_1(self):
        assert main(["frobnicate"]) == 1

    def test_help_exits_0(self):
        assert main(["--help"]) == 0
