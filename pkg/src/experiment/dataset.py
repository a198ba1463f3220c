import logging
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from src.custom_exception import DatasetFormatError
from src.ppg.feature_matrix import FEATURE_EXT, FeatureMatrix, minmax_normalize, read_feature_file

GROUPS_FILE = 'groups.txt'
GROUND_TRUTH_FILE = 'ground_truth.txt'
PUBLIC_EXT = '.txt'

TP = 'TP'
TN = 'TN'
UN = 'UN'
PUBLIC = 'DATA'


@dataclass
class Sample:
    sample_id: str
    values: np.ndarray
    group: str
    given_label: int
    true_label: Optional[int] = None


@dataclass
class DatasetPartition:
    """Samples keyed by id. PPG mode fills the TP/TN/UN groups, public mode only `PUBLIC`."""
    mode: str
    samples: Dict[str, Sample] = field(default_factory=dict)
    feature_names: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.samples = dict(sorted(self.samples.items()))

    def ids(self, group=None):
        return [i for i, s in self.samples.items() if group is None or s.group == group]

    @property
    def tp_ids(self):
        return self.ids(TP)

    @property
    def tn_ids(self):
        return self.ids(TN)

    @property
    def un_ids(self):
        return self.ids(UN)

    @property
    def shape(self):
        first = next(iter(self.samples.values()))
        return first.values.shape

    def matrices(self, ids):
        return np.stack([self.samples[i].values for i in ids])

    def given_label(self, sample_id):
        return self.samples[sample_id].given_label

    def true_label(self, sample_id):
        sample = self.samples[sample_id]
        return sample.true_label if sample.true_label is not None else sample.given_label

    def without(self, removed_ids):
        removed = set(removed_ids)
        return DatasetPartition(self.mode, {i: s for i, s in self.samples.items() if i not in removed},
                                list(self.feature_names))

    def validate(self):
        if not self.samples:
            raise DatasetFormatError("dataset is empty")
        shapes = {s.values.shape for s in self.samples.values()}
        if len(shapes) != 1:
            raise DatasetFormatError(f"samples have different shapes: {sorted(shapes)}")
        for sample in self.samples.values():
            if sample.given_label not in (0, 1):
                raise DatasetFormatError(f"{sample.sample_id}: label must be 0 or 1, got {sample.given_label}")
            if not np.all(np.isfinite(sample.values)):
                raise DatasetFormatError(f"{sample.sample_id}: non-finite values")
        return self


def read_groups(path):
    groups = {}
    with open(path, 'r', encoding='utf-8') as file:
        for number, line in enumerate(file, 1):
            parts = line.split()
            if not parts or parts[0].startswith('#'):
                continue
            if len(parts) != 2 or parts[1] not in (TP, TN, UN):
                raise DatasetFormatError(f"{path}:{number}: expected '<subject_id> TP|TN|UN', got '{line.strip()}'")
            groups[parts[0]] = parts[1]
    return groups


def read_ground_truth(path):
    """subject_id -> true label from a synthetic cohort sidecar."""
    truth = {}
    with open(path, 'r', encoding='utf-8') as file:
        for line in file:
            parts = line.split()
            if len(parts) >= 2 and not parts[0].startswith('#'):
                truth[parts[0]] = 1 if parts[1] == 'positive' else 0
    return truth


def load_ppg_dataset(data_dir) -> DatasetPartition:
    groups_path = os.path.join(data_dir, GROUPS_FILE)
    if not os.path.isfile(groups_path):
        raise DatasetFormatError(f"{data_dir}: missing {GROUPS_FILE}")
    groups = read_groups(groups_path)
    truth_path = os.path.join(data_dir, GROUND_TRUTH_FILE)
    truth = read_ground_truth(truth_path) if os.path.isfile(truth_path) else {}
    samples = {}
    feature_names = None
    for subject_id, group in groups.items():
        path = os.path.join(data_dir, subject_id + FEATURE_EXT)
        if not os.path.isfile(path):
            raise DatasetFormatError(f"{data_dir}: no feature file for subject {subject_id}")
        matrix = read_feature_file(path)
        if feature_names is None:
            feature_names = matrix.feature_names
        elif matrix.feature_names != feature_names:
            raise DatasetFormatError(f"{path}: feature names differ from the other subjects")
        given = 1 if group == TP else 0
        samples[subject_id] = Sample(subject_id, matrix.values, group, given, truth.get(subject_id))
    logging.info(f"load_ppg_dataset: {len(samples)} subjects from {data_dir}")
    return DatasetPartition('ppg', samples, feature_names or []).validate()


def parse_public_line(line, where):
    label_text, _, rest = line.partition(';')
    try:
        label = int(label_text.strip())
        channels = [np.array([float(v) for v in channel.split(',')], dtype=np.float64)
                    for channel in rest.split(';')]
    except ValueError as e:
        raise DatasetFormatError(f"{where}: {format(e)}")
    if not rest or len({len(c) for c in channels}) != 1:
        raise DatasetFormatError(f"{where}: channels must be non-empty and of equal length")
    return label, np.stack(channels)


def load_public_dataset(data_dir, normalize=True) -> DatasetPartition:
    """Every `*.txt` file of the folder, one `label;ch1,...;ch2,...` sample per line."""
    files = sorted(name for name in os.listdir(data_dir) if name.endswith(PUBLIC_EXT))
    if not files:
        raise DatasetFormatError(f"{data_dir}: no {PUBLIC_EXT} sample files")
    samples = {}
    for name in files:
        stem = os.path.splitext(name)[0]
        with open(os.path.join(data_dir, name), 'r', encoding='utf-8') as file:
            lines = [line.strip() for line in file if line.strip()]
        for number, line in enumerate(lines):
            label, values = parse_public_line(line, f"{name}:{number + 1}")
            if normalize:
                values = minmax_normalize(FeatureMatrix(values, [''] * len(values))).values
            sample_id = f"{stem}_{number:05d}"
            samples[sample_id] = Sample(sample_id, values, PUBLIC, label, label)
    n_channels = len(next(iter(samples.values())).values)
    logging.info(f"load_public_dataset: {len(samples)} samples from {len(files)} file(s) in {data_dir}")
    return DatasetPartition('public', samples, [f"channel_{d}" for d in range(n_channels)]).validate()
