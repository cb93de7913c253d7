"""Synthetic segmented corpora with controllable topical separation.

Each document concatenates a few segments; each segment draws its
tokens from one topic's private vocabulary, with a configurable share
of tokens replaced by words from a vocabulary shared across all topics
(noise).  Topics within a document are distinct, so adjacent segments
always switch vocabulary.  Within a segment, sentences draw from a
focused subset of the topic's words rather than the whole vocabulary,
mimicking how running text dwells on a handful of terms at a time;
this gives adjacent same-segment sentences realistic lexical overlap.
Documents get sequential dates and round-robin group labels so
chronological splits and group folds both work on the output.
"""

from __future__ import annotations

import datetime as dt
import random
from dataclasses import dataclass

from .corpus import Document


@dataclass(frozen=True)
class SynthConfig:
    """Shape of the generated corpus."""

    num_docs: int = 200
    num_topics: int = 24
    words_per_topic: int = 50
    noise_words: int = 50
    noise_rate: float = 0.10
    min_segments: int = 3
    max_segments: int = 8
    min_sentences: int = 4
    max_sentences: int = 12
    min_tokens: int = 15
    max_tokens: int = 25
    focus_words: int = 12
    num_groups: int = 5
    start_date: dt.date = dt.date(2023, 1, 1)

    def __post_init__(self) -> None:
        if self.max_segments > self.num_topics:
            raise ValueError("need at least as many topics as segments per document")
        if not 0.0 <= self.noise_rate < 1.0:
            raise ValueError("noise_rate must be in [0, 1)")
        if self.min_segments < 1 or self.min_sentences < 1 or self.min_tokens < 1:
            raise ValueError("minimum sizes must be >= 1")
        if self.focus_words < 1:
            raise ValueError("focus_words must be >= 1")


def generate_corpus(cfg: SynthConfig | None = None, seed: int = 0) -> list[Document]:
    """Deterministic corpus for the given seed."""
    cfg = cfg or SynthConfig()
    rng = random.Random(seed)
    topic_vocab = [
        [f"t{t:02d}w{j:02d}" for j in range(cfg.words_per_topic)]
        for t in range(cfg.num_topics)
    ]
    noise_vocab = [f"nz{j:02d}" for j in range(cfg.noise_words)]

    docs = []
    for i in range(cfg.num_docs):
        num_segments = rng.randint(cfg.min_segments, cfg.max_segments)
        topics = rng.sample(range(cfg.num_topics), num_segments)
        sentences: list[str] = []
        boundaries: list[int] = []
        for seg_pos, topic in enumerate(topics):
            seg_words = rng.sample(
                topic_vocab[topic], min(cfg.focus_words, cfg.words_per_topic)
            )
            for _ in range(rng.randint(cfg.min_sentences, cfg.max_sentences)):
                tokens = []
                for _ in range(rng.randint(cfg.min_tokens, cfg.max_tokens)):
                    if rng.random() < cfg.noise_rate:
                        tokens.append(rng.choice(noise_vocab))
                    else:
                        tokens.append(rng.choice(seg_words))
                sentences.append(" ".join(tokens) + ".")
            if seg_pos < num_segments - 1:
                boundaries.append(len(sentences) - 1)
        docs.append(
            Document(
                doc_id=f"doc{i:04d}",
                sentences=tuple(sentences),
                boundaries=tuple(boundaries),
                group=f"g{i % cfg.num_groups}",
                date=cfg.start_date + dt.timedelta(days=i),
            )
        )
    return docs
