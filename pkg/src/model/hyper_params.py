import json
from dataclasses import dataclass, field, asdict
from typing import List, Optional

from src.custom_exception import DimensionError

MAX_HIDDEN1 = 50
MIN_HIDDEN1 = 8
FIRST_POOL = 4
MAX_SECOND_POOL = 8
N_CLASSES = 2


def auto_hidden_sizes(n_windows, hidden1=None, hidden2=None):
    """70 -> 50 -> 25 scaled to other window counts."""
    if hidden1 is None:
        hidden1 = min(MAX_HIDDEN1, max(MIN_HIDDEN1, round(n_windows * 5 / 7)))
    if hidden2 is None:
        hidden2 = hidden1 // 2
    return hidden1, hidden2


@dataclass
class HyperParams:
    n_channels: int
    n_windows: int
    hidden1: int
    hidden2: int
    filters: int = 16
    n_classes: int = N_CLASSES
    lr: float = 0.001
    max_epochs: int = 100
    patience: int = 10
    min_delta: float = 1e-5
    self_supervised_epochs: int = 3
    dbn_activation: str = 'linear'
    feature_names: List[str] = field(default_factory=list)

    @classmethod
    def create(cls, n_channels, n_windows, hidden1: Optional[int] = None, hidden2: Optional[int] = None,
               **kwargs):
        hidden1, hidden2 = auto_hidden_sizes(n_windows, hidden1, hidden2)
        hp = cls(n_channels=n_channels, n_windows=n_windows, hidden1=hidden1, hidden2=hidden2, **kwargs)
        return hp.validate()

    @property
    def kernel_size(self):
        return self.filters

    @property
    def pooled1(self):
        return self.hidden2 // FIRST_POOL

    @property
    def pool2(self):
        return min(self.pooled1, MAX_SECOND_POOL)

    @property
    def pooled2(self):
        return self.pooled1 // self.pool2

    @property
    def flatten_dim(self):
        return self.filters * self.pooled2

    def channel_names(self):
        if self.feature_names:
            return list(self.feature_names)
        return [f"channel_{d}" for d in range(self.n_channels)]

    def validate(self):
        if self.n_channels < 1 or self.n_windows < 1:
            raise DimensionError(f"input must be at least 1x1, got ({self.n_channels}, {self.n_windows})")
        if self.filters < 1:
            raise DimensionError(f"filters must be >= 1, got {self.filters}")
        if self.hidden1 < 1:
            raise DimensionError(f"hidden1 must be >= 1, got {self.hidden1}")
        if self.pooled1 < 1:
            raise DimensionError(f"hidden2 // {FIRST_POOL} must be >= 1, got hidden2={self.hidden2}")
        if self.n_classes != N_CLASSES:
            raise DimensionError(f"only binary classification is supported, got {self.n_classes} classes")
        if self.feature_names and len(self.feature_names) != self.n_channels:
            raise DimensionError(f"{len(self.feature_names)} feature names for {self.n_channels} channels")
        return self

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True, separators=(',', ':'))

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text)).validate()
