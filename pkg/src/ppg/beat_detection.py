"""
Threshold peak detection for band-passed PPG windows.

A sample is a peak candidate when it is the maximum of a run of samples lying
strictly above a centred rolling mean lifted by a fraction of the window's
standard deviation. Candidates closer than the 220 bpm refractory period keep
the higher one. Feet are the minima between consecutive peaks; the first and
last peak only bound a foot and do not open a complete beat.
"""
import math
from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy.ndimage import uniform_filter1d

from src.custom_exception import BeatDetectionError

ROLLING_WINDOW_S = 0.75
THRESHOLD_LIFT = 0.3
MAX_BPM = 220
FLAT_RANGE = 1e-12


@dataclass
class BeatAnnotations:
    feet: List[int] = field(default_factory=list)
    peaks: List[int] = field(default_factory=list)
    all_peaks: List[int] = field(default_factory=list)

    @property
    def n_beats(self):
        return len(self.peaks)

    def is_interleaved(self):
        if len(self.feet) != len(self.peaks) + 1:
            return False
        return all(self.feet[i] < self.peaks[i] < self.feet[i + 1] for i in range(len(self.peaks)))


def min_peak_distance(fs, max_bpm=MAX_BPM):
    return int(math.ceil(60.0 / max_bpm * fs))


def candidate_peaks(window, fs, rolling_window_s=ROLLING_WINDOW_S, lift=THRESHOLD_LIFT):
    size = max(1, int(round(rolling_window_s * fs)))
    threshold = uniform_filter1d(window, size=size, mode='nearest') + lift * np.std(window)
    above = np.concatenate(([False], window > threshold, [False])).astype(np.int8)
    edges = np.diff(above)
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1)
    return [int(start + np.argmax(window[start:stop])) for start, stop in zip(starts, stops)]


def apply_refractory(candidates, window, distance):
    accepted = []
    for candidate in candidates:
        if accepted and candidate - accepted[-1] < distance:
            if window[candidate] > window[accepted[-1]]:
                accepted[-1] = candidate
            continue
        accepted.append(candidate)
    return accepted


def detect_beats(window, fs) -> BeatAnnotations:
    window = np.asarray(window, dtype=np.float64)
    if window.size == 0 or not np.ptp(window) > FLAT_RANGE:
        raise BeatDetectionError("flat window, no pulse to detect")
    peaks = apply_refractory(candidate_peaks(window, fs), window, min_peak_distance(fs))
    if len(peaks) < 2:
        raise BeatDetectionError(f"{len(peaks)} peak(s) detected, at least 2 are needed")
    feet = [int(a + 1 + np.argmin(window[a + 1:b])) for a, b in zip(peaks[:-1], peaks[1:])]
    return BeatAnnotations(feet=feet, peaks=peaks[1:-1], all_peaks=peaks)
