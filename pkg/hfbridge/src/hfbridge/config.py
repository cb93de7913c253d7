"""Run configuration and the bridge's error type."""

from __future__ import annotations

from dataclasses import dataclass, field


class BridgeError(ValueError):
    """Invalid input, configuration, or wire-format violation."""


@dataclass(frozen=True)
class PairLossConfig:
    """Weights and shape constants for the pairwise training loss.

    Defaults are locked to the linear toolkit's loss so a probability
    batch produces the same value in both packages (the cross-package
    tests hold them to 1e-6).
    """

    focal_gamma: float = 1.5
    focal_alpha: float = 0.8
    conf_weight: float = 0.15
    conf_margin: float = 0.5
    boundary_weight: float = 0.2
    boundary_sigma: float = 2.0
    prob_floor: float = 1e-7

    def __post_init__(self) -> None:
        if self.focal_gamma < 0:
            raise BridgeError("focal_gamma must be non-negative")
        if not 0.0 < self.focal_alpha < 1.0:
            raise BridgeError("focal_alpha must lie in (0, 1)")
        if self.conf_weight < 0 or self.boundary_weight < 0:
            raise BridgeError("loss term weights must be non-negative")
        if not 0.0 < self.conf_margin < 1.0:
            raise BridgeError("conf_margin must lie in (0, 1)")
        if self.boundary_sigma <= 0:
            raise BridgeError("boundary_sigma must be positive")
        if not 0.0 < self.prob_floor < 0.5:
            raise BridgeError("prob_floor must lie in (0, 0.5)")


@dataclass(frozen=True)
class BridgeConfig:
    """Fine-tuning settings.

    model_ref names the pretrained encoder: a hub identifier or a local
    checkpoint directory.  Training runs max_epochs epochs and keeps the
    weights of the epoch with the best validation boundary F1.
    """

    model_ref: str
    learning_rate: float = 5e-6
    batch_size: int = 8
    max_epochs: int = 12
    loss: PairLossConfig = field(default_factory=PairLossConfig)
    max_seq_length: int = 256
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.model_ref:
            raise BridgeError("model_ref must name a pretrained encoder")
        if self.learning_rate <= 0:
            raise BridgeError("learning_rate must be positive")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise BridgeError("batch_size and max_epochs must be positive")
        if self.max_seq_length < 8:
            raise BridgeError("max_seq_length must be at least 8")
