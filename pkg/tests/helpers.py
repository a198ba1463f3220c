import numpy as np

from src.experiment.dataset import PUBLIC, TN, TP, UN, DatasetPartition, Sample
from src.model.hyper_params import HyperParams


def toy_matrix(label, rng, n_channels=3, n_windows=16):
    """Class 1 rises over the windows in channel 0, class 0 falls, plus noise."""
    t = np.linspace(0.0, 1.0, n_windows)
    values = rng.uniform(0.0, 0.3, size=(n_channels, n_windows))
    values[0] += t if label == 1 else 1.0 - t
    return values


def make_public_partition(n=27, n_channels=3, n_windows=16, seed=0):
    rng = np.random.default_rng(seed)
    samples = {}
    for k in range(n):
        label = k % 2
        sample_id = f"s_{k:05d}"
        samples[sample_id] = Sample(sample_id, toy_matrix(label, rng, n_channels, n_windows), PUBLIC, label, label)
    return DatasetPartition('public', samples, [f"channel_{d}" for d in range(n_channels)])


def make_ppg_partition(n_tp=8, n_tn=6, n_un=10, n_planted=2, n_channels=3, n_windows=16, seed=0):
    rng = np.random.default_rng(seed)
    samples = {}
    for group, count in ((TP, n_tp), (TN, n_tn), (UN, n_un)):
        for k in range(count):
            sample_id = f"{group}{k + 1:03d}"
            true_label = 1 if group == TP or (group == UN and k < n_planted) else 0
            samples[sample_id] = Sample(sample_id, toy_matrix(true_label, rng, n_channels, n_windows), group,
                                        1 if group == TP else 0, true_label)
    return DatasetPartition('ppg', samples, [f"feature_{d}" for d in range(n_channels)])


def small_hp(n_channels=3, n_windows=16, **kwargs):
    options = dict(filters=4, max_epochs=8, patience=3, self_supervised_epochs=1, lr=0.01)
    options.update(kwargs)
    return HyperParams.create(n_channels, n_windows, **options)
