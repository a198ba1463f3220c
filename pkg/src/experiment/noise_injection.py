from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from src.custom_exception import ConfigError
from src.noise.confidence_learning import round_half_away
from src.run_config import NoiseModes


@dataclass
class NoiseInjection:
    labels: Dict[str, int] = field(default_factory=dict)
    selected_ids: List[str] = field(default_factory=list)
    flipped_ids: List[str] = field(default_factory=list)

    @property
    def n_flipped(self):
        return len(self.flipped_ids)


def inject_symmetric_noise(ids, labels, ratio, seed, mode=NoiseModes.FLIP) -> NoiseInjection:
    """
    Pick round(ratio * n) ids uniformly. `flip` gives each picked id the other
    label; `shuffle` permutes the labels of the picked ids among themselves.
    """
    if not 0.0 <= ratio <= 1.0:
        raise ConfigError(f"noise ratio must be in [0, 1], got {ratio}")
    ids = list(ids)
    rng = np.random.default_rng(seed)
    n_selected = round_half_away(ratio * len(ids))
    selected = [ids[i] for i in sorted(rng.choice(len(ids), size=n_selected, replace=False))] if n_selected else []
    noisy = {i: int(labels[i]) for i in ids}
    if mode == NoiseModes.FLIP:
        for i in selected:
            noisy[i] = 1 - noisy[i]
    elif mode == NoiseModes.SHUFFLE:
        permuted = rng.permutation([noisy[i] for i in selected]) if selected else []
        for i, label in zip(selected, permuted):
            noisy[i] = int(label)
    else:
        raise ConfigError(f"unknown noise mode {mode!r}")
    flipped = [i for i in ids if noisy[i] != int(labels[i])]
    return NoiseInjection(noisy, selected, flipped)
