import logging
import os
from dataclasses import dataclass, field, replace
from typing import List

import numpy as np

from src.custom_exception import BeatDetectionError, DatasetFormatError, FeatureMatrixError
from src.ppg.beat_detection import detect_beats
from src.ppg.features import FEATURE_NAMES, extract_window_features
from src.ppg.filters import bandpass_filter, baseline_subtract
from src.ppg.recording import RawRecording
from src.ppg.windows import CLIP_TO, OVERLAP, WINDOW_SECONDS, segment_windows

FEATURE_EXT = '.features'


@dataclass
class FeatureMatrix:
    values: np.ndarray
    feature_names: List[str] = field(default_factory=lambda: list(FEATURE_NAMES))
    subject_id: str = ''
    filled_windows: List[int] = field(default_factory=list)

    @property
    def shape(self):
        return self.values.shape

    def validate(self, n_features=None, n_windows=None):
        if self.values.ndim != 2:
            raise FeatureMatrixError(f"{self.subject_id}: feature matrix must be 2-D, got {self.values.shape}")
        if len(self.feature_names) != self.values.shape[0]:
            raise FeatureMatrixError(f"{self.subject_id}: {len(self.feature_names)} names for "
                                     f"{self.values.shape[0]} feature rows")
        expected = (n_features or self.values.shape[0], n_windows or self.values.shape[1])
        if self.values.shape != expected:
            raise FeatureMatrixError(f"{self.subject_id}: expected shape {expected}, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise FeatureMatrixError(f"{self.subject_id}: feature matrix contains non-finite values")
        return self


def minmax_normalize(matrix: FeatureMatrix) -> FeatureMatrix:
    """Each feature row to [0, 1] across the windows, constant rows to 0.5."""
    values = np.asarray(matrix.values, dtype=np.float64)
    low = values.min(axis=1, keepdims=True)
    high = values.max(axis=1, keepdims=True)
    constant = np.isclose(low, high, rtol=1e-9, atol=0.0)
    span = np.where(constant, 1.0, high - low)
    normalized = np.where(constant, 0.5, np.clip((values - low) / span, 0.0, 1.0))
    return replace(matrix, values=normalized)


def fill_failed_windows(rows, n_windows, subject_id=''):
    """Nearest earlier valid window, else the nearest later one."""
    valid = [t for t in range(n_windows) if rows[t] is not None]
    if not valid:
        raise FeatureMatrixError(f"{subject_id}: beat detection failed in all {n_windows} windows")
    filled = []
    for t in range(n_windows):
        if rows[t] is None:
            earlier = [v for v in valid if v < t]
            source = earlier[-1] if earlier else valid[0]
            rows[t] = rows[source]
            filled.append(t)
    return rows, filled


def raw_feature_matrix(recording: RawRecording, window_s=WINDOW_SECONDS, overlap=OVERLAP,
                       clip_to=CLIP_TO) -> FeatureMatrix:
    """Un-normalized (38, clip_to) window features of one recording."""
    recording.validate()
    fs = recording.sample_rate
    static = bandpass_filter(recording.static_phase, fs)
    stimulation = baseline_subtract(bandpass_filter(recording.stimulation_phase, fs), static)
    windows = segment_windows(stimulation, fs, window_s, overlap, clip_to)
    rows = []
    for index, window in enumerate(windows):
        try:
            rows.append(extract_window_features(window, detect_beats(window, fs), fs))
        except BeatDetectionError as e:
            logging.warning(f"{recording.subject_id}: window {index}: {format(e)}")
            rows.append(None)
    rows, filled = fill_failed_windows(rows, len(windows), recording.subject_id)
    if filled:
        logging.warning(f"{recording.subject_id}: filled windows {filled} from their nearest valid window")
    return FeatureMatrix(np.stack(rows, axis=1), list(FEATURE_NAMES), recording.subject_id, filled)


def build_feature_matrix(recording: RawRecording, window_s=WINDOW_SECONDS, overlap=OVERLAP,
                         clip_to=CLIP_TO) -> FeatureMatrix:
    return minmax_normalize(raw_feature_matrix(recording, window_s, overlap, clip_to)).validate(
        len(FEATURE_NAMES), clip_to)


def write_feature_file(path, matrix: FeatureMatrix):
    with open(path, 'w', encoding='utf-8', newline='\n') as file:
        file.write('# ' + ','.join(matrix.feature_names) + '\n')
        for row in matrix.values:
            file.write(' '.join('%.17g' % v for v in row) + '\n')


def read_feature_file(path) -> FeatureMatrix:
    subject_id = os.path.basename(path)
    if subject_id.endswith(FEATURE_EXT):
        subject_id = subject_id[:-len(FEATURE_EXT)]
    with open(path, 'r', encoding='utf-8') as file:
        lines = [line.strip() for line in file.read().splitlines() if line.strip()]
    if not lines or not lines[0].startswith('#'):
        raise DatasetFormatError(f"{path}: missing '# name1,name2,...' header")
    names = [name.strip() for name in lines[0][1:].split(',') if name.strip()]
    try:
        values = np.array([[float(v) for v in line.split()] for line in lines[1:]], dtype=np.float64)
    except ValueError as e:
        raise DatasetFormatError(f"{path}: {format(e)}")
    if values.ndim != 2 or len(values) != len(names):
        raise DatasetFormatError(f"{path}: {len(names)} feature names but {len(values)} rows of unequal length")
    return FeatureMatrix(values, names, subject_id).validate()
