"""Pipeline orchestration and command-line interface.

Subcommands: ingest, pairs, train, score, segment, tune, eval, cv,
analyze.  All take a JSON run-config (--config) with per-module
sections plus --seed and --out overrides.  Exit codes: 0 success, 1
validation error, 2 I/O error.

Reports are written as CSV/JSON/markdown files with no timestamps and
repr-exact floats, so identical config and seed produce byte-identical
outputs.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import math
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from . import __version__
from .corpus import (
    Document,
    ValidationError,
    chronological_split,
    group_folds,
    parse_corpus,
    write_corpus,
)
from .metrics import (
    DocScores,
    MacroScores,
    MetricConfig,
    macro_average,
    match_boundaries,
    score_document,
)
from .pairgen import build_training_pairs, derive_seed, write_pairs
from .scorer import (
    LinearScorer,
    ProbabilityRecord,
    TrainConfig,
    load_model,
    read_external_probs,
    save_model,
    score_document as score_doc_probs,
    train,
    write_probs,
)
from .segloss import LossConfig
from .segmenter import SegmenterConfig, SweepRow, infer_boundaries, tune_threshold
from .texttiling import TilingConfig, texttiling_boundaries

HIST_BINS = 50
NUM_DECILES = 10

SYSTEM_BUILTIN = "builtin_scorer"
SYSTEM_EXTERNAL = "external_probs"
SYSTEM_TEXTTILING = "texttiling"
SYSTEMS = (SYSTEM_BUILTIN, SYSTEM_EXTERNAL, SYSTEM_TEXTTILING)

SPLIT_CHRONOLOGICAL = "chronological"
SPLIT_PREDEFINED = "predefined"
SPLIT_GROUP_FOLDS = "group_folds"


# ---------------------------------------------------------------------------
# Run configuration


@dataclass(frozen=True)
class SplitSpec:
    """How to divide the corpus into train/val/test."""

    type: str = SPLIT_CHRONOLOGICAL
    fractions: tuple[float, float, float] = (0.6, 0.2, 0.2)
    path: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "fractions", tuple(self.fractions))
        if self.type not in (SPLIT_CHRONOLOGICAL, SPLIT_PREDEFINED, SPLIT_GROUP_FOLDS):
            raise ValidationError(f"unknown split type {self.type!r}")
        if self.type == SPLIT_PREDEFINED and not self.path:
            raise ValidationError("predefined split requires a path")


@dataclass(frozen=True)
class PairsConfig:
    """Pair-generation settings for training runs."""

    boundary_fraction: float = 0.30
    hard_negatives_per_doc: int = 10

    def __post_init__(self) -> None:
        if not 0.0 < self.boundary_fraction < 1.0:
            raise ValidationError("boundary_fraction must be in (0, 1)")
        if self.hard_negatives_per_doc < 0:
            raise ValidationError("hard_negatives_per_doc must be >= 0")


@dataclass
class RunConfig:
    """Resolved run settings: one section per module plus shared knobs."""

    corpus: str | None = None
    split: SplitSpec = dataclasses.field(default_factory=SplitSpec)
    system: str = SYSTEM_BUILTIN
    model_path: str | None = None
    external_probs: str | None = None
    loss: LossConfig = dataclasses.field(default_factory=LossConfig)
    train: TrainConfig = dataclasses.field(default_factory=TrainConfig)
    segmenter: SegmenterConfig = dataclasses.field(default_factory=SegmenterConfig)
    metrics: MetricConfig = dataclasses.field(default_factory=MetricConfig)
    texttiling: TilingConfig = dataclasses.field(default_factory=TilingConfig)
    pairs: PairsConfig = dataclasses.field(default_factory=PairsConfig)
    seed: int = 0
    out_dir: str = "out"


def _build_section(cls, obj: object, where: str):
    if not isinstance(obj, dict):
        raise ValidationError(f"config section {where!r} must be a JSON object")
    if cls is TilingConfig and "stemmer" in obj:
        raise ValidationError("texttiling.stemmer is configurable only programmatically")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(obj) - known)
    if unknown:
        raise ValidationError(f"unknown keys in config section {where!r}: {', '.join(unknown)}")
    coerced = {k: tuple(v) if isinstance(v, list) else v for k, v in obj.items()}
    try:
        return cls(**coerced)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"config section {where!r}: {exc}") from exc


_SECTION_TYPES = {
    "split": SplitSpec,
    "loss": LossConfig,
    "train": TrainConfig,
    "segmenter": SegmenterConfig,
    "metrics": MetricConfig,
    "texttiling": TilingConfig,
    "pairs": PairsConfig,
}
_SCALAR_KEYS = ("corpus", "system", "model_path", "external_probs", "seed", "out_dir")


def load_run_config(
    config_path: str | None,
    seed_override: int | None = None,
    out_override: str | None = None,
) -> RunConfig:
    """Build a RunConfig from a JSON file plus CLI overrides."""
    raw: dict = {}
    if config_path is not None:
        with open(config_path, encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{config_path}: invalid JSON ({exc})") from exc
        if not isinstance(raw, dict):
            raise ValidationError(f"{config_path}: config must be a JSON object")
    unknown = sorted(set(raw) - set(_SECTION_TYPES) - set(_SCALAR_KEYS))
    if unknown:
        raise ValidationError(f"unknown config keys: {', '.join(unknown)}")

    cfg = RunConfig()
    for key in _SCALAR_KEYS:
        if key in raw:
            setattr(cfg, key, raw[key])
    if seed_override is not None:
        cfg.seed = seed_override
    if out_override is not None:
        cfg.out_dir = out_override
    if not isinstance(cfg.seed, int) or isinstance(cfg.seed, bool):
        raise ValidationError("seed must be an integer")
    if cfg.system not in SYSTEMS:
        raise ValidationError(f"unknown system {cfg.system!r} (expected one of {SYSTEMS})")

    for key, cls in _SECTION_TYPES.items():
        if key in raw:
            setattr(cfg, key, _build_section(cls, raw[key], key))
    # The trainer's seed follows the run seed unless set explicitly.
    if "train" not in raw or "seed" not in raw["train"]:
        cfg.train = dataclasses.replace(cfg.train, seed=cfg.seed)
    return cfg


def config_to_dict(cfg: RunConfig) -> dict:
    """JSON-safe dump of the resolved configuration."""
    out: dict = {key: getattr(cfg, key) for key in _SCALAR_KEYS}
    for key, _ in _SECTION_TYPES.items():
        section = dataclasses.asdict(getattr(cfg, key))
        if key == "texttiling":
            section.pop("stemmer", None)
        for name, value in list(section.items()):
            if isinstance(value, tuple):
                section[name] = list(value)
        out[key] = section
    return out


# ---------------------------------------------------------------------------
# Corpus splitting and per-system hypothesis computation


def _require_corpus(cfg: RunConfig) -> list[Document]:
    if not cfg.corpus:
        raise ValidationError("config must name a corpus file")
    return parse_corpus(cfg.corpus)


def resolve_split(
    docs: Sequence[Document], spec: SplitSpec
) -> tuple[list[Document], list[Document], list[Document]]:
    """Materialize the train/val/test document lists for a split spec."""
    by_id = {d.doc_id: d for d in docs}
    if spec.type == SPLIT_CHRONOLOGICAL:
        split = chronological_split(docs, spec.fractions)
        return (
            [by_id[i] for i in split.train],
            [by_id[i] for i in split.val],
            [by_id[i] for i in split.test],
        )
    if spec.type == SPLIT_PREDEFINED:
        assert spec.path is not None
        with open(spec.path, encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{spec.path}: invalid JSON ({exc})") from exc
        out = []
        seen: set[str] = set()
        for part in ("train", "val", "test"):
            ids = raw.get(part, [])
            if not isinstance(ids, list):
                raise ValidationError(f"{spec.path}: {part!r} must be a list of doc ids")
            missing = [i for i in ids if i not in by_id]
            if missing:
                raise ValidationError(
                    f"{spec.path}: unknown doc ids in {part!r}: {', '.join(missing)}"
                )
            dupes = [i for i in ids if i in seen]
            if dupes:
                raise ValidationError(
                    f"{spec.path}: doc ids in multiple parts: {', '.join(dupes)}"
                )
            seen.update(ids)
            out.append([by_id[i] for i in ids])
        return out[0], out[1], out[2]
    raise ValidationError(f"split type {spec.type!r} yields folds; use the cv command")


def _load_probs(
    cfg: RunConfig, all_docs: Sequence[Document]
) -> dict[str, list[ProbabilityRecord]]:
    """Probabilities for every document under the configured system."""
    if cfg.system == SYSTEM_BUILTIN:
        if not cfg.model_path:
            raise ValidationError("system builtin_scorer requires model_path")
        model = load_model(cfg.model_path)
        return {doc.doc_id: score_doc_probs(model, doc) for doc in all_docs}
    if cfg.system == SYSTEM_EXTERNAL:
        if not cfg.external_probs:
            raise ValidationError("system external_probs requires external_probs path")
        return read_external_probs(cfg.external_probs, corpus=all_docs)
    raise ValidationError(f"system {cfg.system!r} produces no probabilities")


def _hyp_from_probs(
    docs: Sequence[Document],
    probs_by_doc: Mapping[str, Sequence[ProbabilityRecord]],
    tau: float,
) -> dict[str, set[int]]:
    out = {}
    for doc in docs:
        records = probs_by_doc.get(doc.doc_id, []) if doc.n == 1 else probs_by_doc[doc.doc_id]
        out[doc.doc_id] = infer_boundaries(records, tau, n=doc.n) if doc.n > 1 else set()
    return out


def _hyp_texttiling(docs: Sequence[Document], cfg: TilingConfig) -> dict[str, set[int]]:
    return {doc.doc_id: texttiling_boundaries(doc, cfg) for doc in docs}


# ---------------------------------------------------------------------------
# Probability and error analysis


@dataclass(frozen=True)
class ProbabilityAnalysis:
    """Distribution summary of per-gap boundary probabilities.

    histogram: counts over 50 bins of width 0.02 (1.0 lands in the last
    bin).  overlap_fraction: share of probabilities in [0.4, 0.6]
    inclusive.  separation_gap: 5th-percentile boundary probability
    minus 95th-percentile continuation probability (nearest-rank), None
    when either class is absent.
    """

    histogram: tuple[int, ...]
    overlap_fraction: float
    separation_gap: float | None
    num_gaps: int


def _nearest_rank(sorted_values: Sequence[float], q: float) -> float:
    rank = max(1, math.ceil(q / 100.0 * len(sorted_values)))
    return sorted_values[rank - 1]


def analyze_probabilities(
    probs_by_doc: Mapping[str, Sequence[ProbabilityRecord]],
    docs: Sequence[Document],
) -> ProbabilityAnalysis:
    """Histogram, ambiguity overlap, and class separation over the docs' gaps."""
    histogram = [0] * HIST_BINS
    overlap = 0
    boundary_probs: list[float] = []
    continuation_probs: list[float] = []
    total = 0
    for doc in docs:
        if doc.n < 2:
            continue
        records = probs_by_doc.get(doc.doc_id)
        if records is None:
            raise ValidationError(f"no probabilities for document {doc.doc_id!r}")
        bset = doc.boundary_set
        for rec in records:
            p = rec.p_not_next
            histogram[min(int(p * HIST_BINS), HIST_BINS - 1)] += 1
            if 0.4 <= p <= 0.6:
                overlap += 1
            if rec.gap_index in bset:
                boundary_probs.append(p)
            else:
                continuation_probs.append(p)
            total += 1
    separation: float | None = None
    if boundary_probs and continuation_probs:
        separation = _nearest_rank(sorted(boundary_probs), 5) - _nearest_rank(
            sorted(continuation_probs), 95
        )
    return ProbabilityAnalysis(
        histogram=tuple(histogram),
        overlap_fraction=overlap / total if total else 0.0,
        separation_gap=separation,
        num_gaps=total,
    )


@dataclass(frozen=True)
class PositionalRow:
    """Error rates for one relative-position decile, corpus-wide."""

    decile: int
    gap_count: int
    fp_count: int
    fn_count: int
    fp_rate: float
    fn_rate: float


@dataclass(frozen=True)
class GroupRow:
    """Error rates for one document group."""

    group: str
    gap_count: int
    fp_count: int
    fn_count: int
    fp_rate: float
    fn_rate: float


def _doc_errors(
    doc: Document, hyp: set[int], n_t: int
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """(false alarm gaps, miss gaps) per the boundary matching."""
    m = match_boundaries(doc.boundaries, hyp, n_t)
    return m.false_alarms, m.misses


def positional_error_profile(
    docs: Sequence[Document],
    hyp_by_doc: Mapping[str, set[int]],
    n_t: int = 2,
) -> list[PositionalRow]:
    """FP/FN rates per relative-position decile, aggregated corpus-wide.

    Each gap g of a document with n sentences falls in decile
    floor(10 * g / (n - 1)), clamped to 9; rates divide error counts by
    the number of gaps observed in the decile.
    """
    gap_counts = [0] * NUM_DECILES
    fp_counts = [0] * NUM_DECILES
    fn_counts = [0] * NUM_DECILES

    def decile(gap: int, n: int) -> int:
        return min(NUM_DECILES - 1, NUM_DECILES * gap // (n - 1))

    for doc in docs:
        if doc.n < 2:
            continue
        for gap in range(doc.n - 1):
            gap_counts[decile(gap, doc.n)] += 1
        fps, fns = _doc_errors(doc, hyp_by_doc.get(doc.doc_id, set()), n_t)
        for gap in fps:
            fp_counts[decile(gap, doc.n)] += 1
        for gap in fns:
            fn_counts[decile(gap, doc.n)] += 1
    return [
        PositionalRow(
            decile=d,
            gap_count=gap_counts[d],
            fp_count=fp_counts[d],
            fn_count=fn_counts[d],
            fp_rate=fp_counts[d] / gap_counts[d] if gap_counts[d] else 0.0,
            fn_rate=fn_counts[d] / gap_counts[d] if gap_counts[d] else 0.0,
        )
        for d in range(NUM_DECILES)
    ]


def group_error_rates(
    docs: Sequence[Document],
    hyp_by_doc: Mapping[str, set[int]],
    n_t: int = 2,
) -> list[GroupRow]:
    """FP/FN rates per group, normalized by the group's total gap count.

    Documents without a group land in an "ungrouped" bucket.  Rows come
    back sorted by group name.
    """
    stats: dict[str, list[int]] = {}
    for doc in docs:
        name = doc.group if doc.group is not None else "ungrouped"
        bucket = stats.setdefault(name, [0, 0, 0])
        if doc.n < 2:
            continue
        bucket[0] += doc.n - 1
        fps, fns = _doc_errors(doc, hyp_by_doc.get(doc.doc_id, set()), n_t)
        bucket[1] += len(fps)
        bucket[2] += len(fns)
    return [
        GroupRow(
            group=name,
            gap_count=gaps,
            fp_count=fp,
            fn_count=fn,
            fp_rate=fp / gaps if gaps else 0.0,
            fn_rate=fn / gaps if gaps else 0.0,
        )
        for name, (gaps, fp, fn) in sorted(stats.items())
    ]


# ---------------------------------------------------------------------------
# Report emission


@dataclass
class EvalReport:
    """Everything cmd_eval computes for one document set."""

    system: str
    tau: float | None
    doc_scores: list[DocScores]
    macro: MacroScores
    sweep_rows: list[SweepRow] | None
    analysis: ProbabilityAnalysis | None
    positional: list[PositionalRow]
    groups: list[GroupRow]


def _fmt(value: object) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[object]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_json(path: Path, payload: object) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


def _gaps_str(gaps: Sequence[int]) -> str:
    return ";".join(str(g) for g in gaps)


def _file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def build_manifest(cfg: RunConfig, command: str, extra: dict | None = None) -> dict:
    inputs = {}
    for path in (cfg.corpus, cfg.model_path, cfg.external_probs, cfg.split.path):
        if path and Path(path).is_file():
            inputs[str(path)] = _file_digest(path)
    manifest = {
        "command": command,
        "config": config_to_dict(cfg),
        "inputs": inputs,
        "seed": cfg.seed,
        "toolkit_version": __version__,
    }
    if extra:
        manifest.update(extra)
    return manifest


def emit_report(report: EvalReport, out_dir: str | Path, manifest: dict) -> list[Path]:
    """Write the full report file set; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    path = out / "metrics.csv"
    _write_csv(
        path,
        ["doc_id", "group", "n", "ref_boundaries", "hyp_boundaries", "pk", "wd", "bf1", "b", "skipped"],
        [
            [
                s.doc_id,
                s.group if s.group is not None else "",
                s.n,
                _gaps_str(s.ref),
                _gaps_str(s.hyp),
                s.pk,
                s.wd,
                s.bf1,
                s.b,
                s.pk_wd_skipped,
            ]
            for s in report.doc_scores
        ],
    )
    written.append(path)

    path = out / "macro.csv"
    m = report.macro
    _write_csv(
        path,
        ["pk", "wd", "bf1", "b", "n_docs", "n_docs_pk_wd"],
        [[m.pk, m.wd, m.bf1, m.b, m.n_docs, m.n_docs_pk_wd]],
    )
    written.append(path)

    path = out / "macro.md"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# Evaluation summary\n\n")
        fh.write("| System | B-F1 | B | Pk | WD |\n")
        fh.write("|---|---|---|---|---|\n")
        fh.write(
            f"| {report.system} | {m.bf1:.4f} | {m.b:.4f} | {m.pk:.4f} | {m.wd:.4f} |\n"
        )
        fh.write(
            f"\nMacro-averaged over {m.n_docs} documents"
            f" (Pk/WD over {m.n_docs_pk_wd} with a valid probe span).\n"
        )
    written.append(path)

    if report.sweep_rows is not None:
        path = out / "sweep.csv"
        _write_csv(
            path,
            ["tau", "macro_bf1", "macro_pk", "macro_wd", "mean_boundaries_per_doc"],
            [
                [r.tau, r.macro_bf1, r.macro_pk, r.macro_wd, r.mean_boundaries_per_doc]
                for r in report.sweep_rows
            ],
        )
        written.append(path)

    if report.analysis is not None:
        path = out / "prob_hist.csv"
        _write_csv(
            path,
            ["bin_index", "bin_low", "bin_high", "count"],
            [
                [i, f"{i / HIST_BINS:.2f}", f"{(i + 1) / HIST_BINS:.2f}", c]
                for i, c in enumerate(report.analysis.histogram)
            ],
        )
        written.append(path)
        path = out / "analysis.json"
        _write_json(
            path,
            {
                "num_gaps": report.analysis.num_gaps,
                "overlap_fraction": report.analysis.overlap_fraction,
                "separation_gap": report.analysis.separation_gap,
            },
        )
        written.append(path)

    path = out / "positional.csv"
    _write_csv(
        path,
        ["decile", "gap_count", "fp_count", "fn_count", "fp_rate", "fn_rate"],
        [
            [r.decile, r.gap_count, r.fp_count, r.fn_count, r.fp_rate, r.fn_rate]
            for r in report.positional
        ],
    )
    written.append(path)

    path = out / "groups.csv"
    _write_csv(
        path,
        ["group", "gap_count", "fp_count", "fn_count", "fp_rate", "fn_rate"],
        [
            [r.group, r.gap_count, r.fp_count, r.fn_count, r.fp_rate, r.fn_rate]
            for r in report.groups
        ],
    )
    written.append(path)

    path = out / "run_manifest.json"
    _write_json(path, manifest)
    written.append(path)
    return written


# ---------------------------------------------------------------------------
# Commands


def _build_report(
    cfg: RunConfig,
    docs: Sequence[Document],
    all_docs: Sequence[Document],
) -> EvalReport:
    """Evaluate `docs` under the configured system (all_docs give context
    for validating external probability coverage)."""
    if not docs:
        raise ValidationError("empty evaluation set")
    if cfg.system == SYSTEM_TEXTTILING:
        probs_by_doc: dict[str, list[ProbabilityRecord]] | None = None
        hyp_by_doc = _hyp_texttiling(docs, cfg.texttiling)
        tau = None
    else:
        probs_by_doc = _load_probs(cfg, all_docs)
        tau = cfg.segmenter.tau
        hyp_by_doc = _hyp_from_probs(docs, probs_by_doc, tau)

    ordered = sorted(docs, key=lambda d: d.doc_id)
    doc_scores = [
        score_document(
            d.doc_id, d.boundaries, hyp_by_doc[d.doc_id], d.n, group=d.group, cfg=cfg.metrics
        )
        for d in ordered
    ]
    macro = macro_average(doc_scores)

    sweep_rows = None
    analysis = None
    if probs_by_doc is not None:
        _, sweep_rows = tune_threshold(ordered, probs_by_doc, cfg.segmenter, cfg.metrics)
        analysis = analyze_probabilities(probs_by_doc, ordered)
    positional = positional_error_profile(ordered, hyp_by_doc, cfg.metrics.n_t)
    groups = group_error_rates(ordered, hyp_by_doc, cfg.metrics.n_t)
    return EvalReport(
        system=cfg.system,
        tau=tau,
        doc_scores=doc_scores,
        macro=macro,
        sweep_rows=sweep_rows,
        analysis=analysis,
        positional=positional,
        groups=groups,
    )


def cmd_ingest(cfg: RunConfig) -> int:
    docs = _require_corpus(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_corpus(docs, out / "corpus.jsonl")
    groups: dict[str, int] = {}
    for doc in docs:
        name = doc.group if doc.group is not None else "ungrouped"
        groups[name] = groups.get(name, 0) + 1
    _write_json(
        out / "ingest_summary.json",
        {
            "num_docs": len(docs),
            "num_sentences": sum(d.n for d in docs),
            "num_gaps": sum(d.n - 1 for d in docs),
            "num_boundaries": sum(len(d.boundaries) for d in docs),
            "groups": groups,
        },
    )
    _write_json(out / "run_manifest.json", build_manifest(cfg, "ingest"))
    return 0


def cmd_pairs(cfg: RunConfig) -> int:
    docs = _require_corpus(cfg)
    train_docs, _, _ = resolve_split(docs, cfg.split)
    if not train_docs:
        raise ValidationError("empty training split")
    pair_set = build_training_pairs(
        train_docs, cfg.seed, cfg.pairs.boundary_fraction, cfg.pairs.hard_negatives_per_doc
    )
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_pairs(pair_set.pairs, out / "pairs.jsonl")
    by_kind: dict[str, int] = {}
    for p in pair_set.pairs:
        by_kind[p.kind] = by_kind.get(p.kind, 0) + 1
    _write_json(
        out / "pairs_summary.json",
        {
            "num_pairs": len(pair_set.pairs),
            "by_kind": by_kind,
            "no_boundary_pairs_warning": pair_set.no_boundary_pairs,
        },
    )
    _write_json(out / "run_manifest.json", build_manifest(cfg, "pairs"))
    return 0


def cmd_train(cfg: RunConfig) -> int:
    docs = _require_corpus(cfg)
    train_docs, val_docs, _ = resolve_split(docs, cfg.split)
    if not train_docs:
        raise ValidationError("empty training split")
    pair_set = build_training_pairs(
        train_docs, cfg.seed, cfg.pairs.boundary_fraction, cfg.pairs.hard_negatives_per_doc
    )
    model, log = train(pair_set.pairs, val_docs, cfg.loss, cfg.train)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_model(model, out / "model.json")
    _write_json(
        out / "train_log.json",
        {
            "best_epoch": log.best_epoch,
            "best_val_bf1": log.best_val_bf1,
            "epochs": [
                {"epoch": e.epoch, "train_loss": e.train_loss, "val_bf1": e.val_bf1}
                for e in log.epochs
            ],
            "no_boundary_pairs_warning": pair_set.no_boundary_pairs,
            "num_train_pairs": len(pair_set.pairs),
            "seed": cfg.train.seed,
        },
    )
    _write_json(out / "run_manifest.json", build_manifest(cfg, "train"))
    return 0


def cmd_score(cfg: RunConfig) -> int:
    docs = _require_corpus(cfg)
    if not cfg.model_path:
        raise ValidationError("score requires model_path")
    model = load_model(cfg.model_path)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = [rec for doc in docs for rec in score_doc_probs(model, doc)]
    write_probs(records, out / "probs.jsonl")
    _write_json(out / "run_manifest.json", build_manifest(cfg, "score"))
    return 0


def cmd_segment(cfg: RunConfig) -> int:
    docs = _require_corpus(cfg)
    if cfg.system == SYSTEM_TEXTTILING:
        hyp_by_doc = _hyp_texttiling(docs, cfg.texttiling)
    else:
        probs = _load_probs(cfg, docs)
        hyp_by_doc = _hyp_from_probs(docs, probs, cfg.segmenter.tau)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "segments.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for doc in docs:
            boundaries = sorted(hyp_by_doc[doc.doc_id])
            masses = _masses(boundaries, doc.n)
            fh.write(
                json.dumps(
                    {"doc_id": doc.doc_id, "boundaries": boundaries, "masses": masses},
                    ensure_ascii=False,
                )
                + "\n"
            )
    _write_json(out / "run_manifest.json", build_manifest(cfg, "segment"))
    return 0


def _masses(boundaries: Sequence[int], n: int) -> list[int]:
    masses = []
    prev = -1
    for b in boundaries:
        masses.append(b - prev)
        prev = b
    masses.append(n - 1 - prev)
    return masses


def cmd_tune(cfg: RunConfig) -> int:
    docs = _require_corpus(cfg)
    _, val_docs, _ = resolve_split(docs, cfg.split)
    if not val_docs:
        raise ValidationError("empty validation split")
    probs = _load_probs(cfg, docs)
    tau_star, rows = tune_threshold(val_docs, probs, cfg.segmenter, cfg.metrics)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out / "sweep.csv",
        ["tau", "macro_bf1", "macro_pk", "macro_wd", "mean_boundaries_per_doc"],
        [[r.tau, r.macro_bf1, r.macro_pk, r.macro_wd, r.mean_boundaries_per_doc] for r in rows],
    )
    _write_json(out / "tuned.json", {"grid_size": len(rows), "tau_star": tau_star})
    _write_json(out / "run_manifest.json", build_manifest(cfg, "tune", {"tau_star": tau_star}))
    return 0


def cmd_eval(cfg: RunConfig) -> int:
    docs = _require_corpus(cfg)
    _, _, test_docs = resolve_split(docs, cfg.split)
    if not test_docs:
        raise ValidationError("empty test set")
    report = _build_report(cfg, test_docs, docs)
    emit_report(report, cfg.out_dir, build_manifest(cfg, "eval", {"tau": report.tau}))
    return 0


def cmd_analyze(cfg: RunConfig) -> int:
    docs = _require_corpus(cfg)
    probs = _load_probs(cfg, docs)
    tau = cfg.segmenter.tau
    hyp_by_doc = _hyp_from_probs(docs, probs, tau)
    ordered = sorted(docs, key=lambda d: d.doc_id)
    analysis = analyze_probabilities(probs, ordered)
    positional = positional_error_profile(ordered, hyp_by_doc, cfg.metrics.n_t)
    groups = group_error_rates(ordered, hyp_by_doc, cfg.metrics.n_t)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out / "prob_hist.csv",
        ["bin_index", "bin_low", "bin_high", "count"],
        [
            [i, f"{i / HIST_BINS:.2f}", f"{(i + 1) / HIST_BINS:.2f}", c]
            for i, c in enumerate(analysis.histogram)
        ],
    )
    _write_json(
        out / "analysis.json",
        {
            "num_gaps": analysis.num_gaps,
            "overlap_fraction": analysis.overlap_fraction,
            "separation_gap": analysis.separation_gap,
        },
    )
    _write_csv(
        out / "positional.csv",
        ["decile", "gap_count", "fp_count", "fn_count", "fp_rate", "fn_rate"],
        [[r.decile, r.gap_count, r.fp_count, r.fn_count, r.fp_rate, r.fn_rate] for r in positional],
    )
    _write_csv(
        out / "groups.csv",
        ["group", "gap_count", "fp_count", "fn_count", "fp_rate", "fn_rate"],
        [[r.group, r.gap_count, r.fp_count, r.fn_count, r.fp_rate, r.fn_rate] for r in groups],
    )
    _write_json(out / "run_manifest.json", build_manifest(cfg, "analyze", {"tau": tau}))
    return 0


def _inner_split(docs: Sequence[Document]) -> tuple[list[Document], list[Document]]:
    """Chronological 80/20 split used inside each cross-validation fold."""
    undated = [d.doc_id for d in docs if d.date is None]
    if undated:
        raise ValidationError(f"documents missing dates: {', '.join(sorted(undated))}")
    ordered = sorted(docs, key=lambda d: (d.date, d.doc_id))
    if len(ordered) == 1:
        return list(ordered), list(ordered)
    n_train = max(1, min(len(ordered) - 1, int(0.8 * len(ordered))))
    return list(ordered[:n_train]), list(ordered[n_train:])


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", name)


def cmd_cv(cfg: RunConfig) -> int:
    """Leave-one-group-out cross-validation of the built-in scorer."""
    docs = _require_corpus(cfg)
    folds = group_folds(docs)
    by_id = {d.doc_id: d for d in docs}
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    fold_macros: list[tuple[str, MacroScores, float]] = []
    for fold in folds:
        train_pool = [by_id[i] for i in fold.train_ids]
        test_docs = [by_id[i] for i in fold.test_ids]
        if not train_pool:
            raise ValidationError(f"fold {fold.held_out_group!r} has an empty training set")
        inner_train, inner_val = _inner_split(train_pool)
        fold_seed = derive_seed(cfg.seed, f"fold:{fold.held_out_group}")
        pair_set = build_training_pairs(
            inner_train,
            fold_seed,
            cfg.pairs.boundary_fraction,
            cfg.pairs.hard_negatives_per_doc,
        )
        train_cfg = dataclasses.replace(cfg.train, seed=fold_seed)
        model, log = train(pair_set.pairs, inner_val, cfg.loss, train_cfg)
        val_probs = {d.doc_id: score_doc_probs(model, d) for d in inner_val}
        tau_star, sweep_rows = tune_threshold(inner_val, val_probs, cfg.segmenter, cfg.metrics)

        test_probs = {d.doc_id: score_doc_probs(model, d) for d in test_docs}
        hyp_by_doc = _hyp_from_probs(test_docs, test_probs, tau_star)
        ordered = sorted(test_docs, key=lambda d: d.doc_id)
        doc_scores = [
            score_document(
                d.doc_id, d.boundaries, hyp_by_doc[d.doc_id], d.n, group=d.group, cfg=cfg.metrics
            )
            for d in ordered
        ]
        macro = macro_average(doc_scores)
        report = EvalReport(
            system=SYSTEM_BUILTIN,
            tau=tau_star,
            doc_scores=doc_scores,
            macro=macro,
            sweep_rows=sweep_rows,
            analysis=analyze_probabilities(test_probs, ordered),
            positional=positional_error_profile(ordered, hyp_by_doc, cfg.metrics.n_t),
            groups=group_error_rates(ordered, hyp_by_doc, cfg.metrics.n_t),
        )
        fold_dir = out / f"fold_{_safe_name(fold.held_out_group)}"
        emit_report(
            report,
            fold_dir,
            build_manifest(
                cfg,
                "cv",
                {
                    "held_out_group": fold.held_out_group,
                    "fold_seed": fold_seed,
                    "tau_star": tau_star,
                    "best_epoch": log.best_epoch,
                    "best_val_bf1": log.best_val_bf1,
                },
            ),
        )
        fold_macros.append((fold.held_out_group, macro, tau_star))

    group_names = [g for g, _, _ in fold_macros]
    header = ["metric"] + group_names + ["mean"]
    rows = []
    for metric in ("bf1", "b", "pk", "wd"):
        values = [getattr(m, metric) for _, m, _ in fold_macros]
        rows.append([metric] + values + [sum(values) / len(values)])
    _write_csv(out / "cv_summary.csv", header, rows)
    _write_json(
        out / "run_manifest.json",
        build_manifest(
            cfg,
            "cv",
            {
                "folds": group_names,
                "tau_star_by_fold": {g: t for g, _, t in fold_macros},
            },
        ),
    )
    return 0


# ---------------------------------------------------------------------------
# CLI plumbing


_COMMANDS = {
    "ingest": cmd_ingest,
    "pairs": cmd_pairs,
    "train": cmd_train,
    "score": cmd_score,
    "segment": cmd_segment,
    "tune": cmd_tune,
    "eval": cmd_eval,
    "cv": cmd_cv,
    "analyze": cmd_analyze,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # map usage errors to the validation exit code
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="textseg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=(fn.__doc__ or "").strip().splitlines()[0] if fn.__doc__ else None)
        p.add_argument("--config", help="JSON run-config path")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="override the output directory")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_run_config(args.config, args.seed, args.out)
        return _COMMANDS[args.command](cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
