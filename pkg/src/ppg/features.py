import logging

import numpy as np
from scipy.integrate import trapezoid
from scipy.stats import entropy

from src.custom_exception import BeatDetectionError
from src.ppg.beat_detection import BeatAnnotations

BEAT_MEAN_FEATURES = ['T1', 'T2', 'T', 'RTR', 'A1', 'A2', 'A', 'RAR', 'H1', 'H2', 'RPR', 'amplitude', 'IBI']
BEAT_STD_FEATURES = ['T1', 'T2', 'T', 'A1', 'A2', 'A', 'H1', 'H2', 'RTR', 'RAR', 'RPR', 'amplitude']
WINDOW_FEATURES = ['SDNN', 'RMSSD', 'pNN20', 'pNN50', 'energy', 'time_duration', 'bandwidth',
                   'time_bandwidth_product', 'heart_rate', 'shannon_entropy', 'S', 'SD1', 'SD2']

FEATURE_NAMES = ([f'mean_{name}' for name in BEAT_MEAN_FEATURES]
                 + [f'std_{name}' for name in BEAT_STD_FEATURES]
                 + WINDOW_FEATURES)

ENTROPY_BINS = 10
MIN_BEATS = 2


def safe_ratio(numerator, denominator, name):
    """Elementwise ratio, zero where the denominator is zero."""
    numerator = np.asarray(numerator, dtype=np.float64)
    denominator = np.asarray(denominator, dtype=np.float64)
    zero = denominator == 0
    if np.any(zero):
        logging.warning(f"{name}: {int(np.count_nonzero(zero))} zero denominator(s), ratio set to 0")
    out = np.zeros(np.broadcast(numerator, denominator).shape)
    np.divide(numerator, denominator, out=out, where=~zero)
    return out


class HrvStatistics:
    """Time-domain and Poincare statistics of an IBI series in milliseconds."""

    @staticmethod
    def sdnn(ibi):
        return float(np.std(ibi))

    @staticmethod
    def rmssd(ibi):
        diff = np.diff(ibi)
        return float(np.sqrt(np.mean(diff ** 2))) if diff.size else 0.0

    @staticmethod
    def pnn(ibi, threshold_ms):
        diff = np.abs(np.diff(ibi))
        return float(np.count_nonzero(diff > threshold_ms) / len(ibi)) if len(ibi) else 0.0

    @staticmethod
    def poincare(ibi):
        ibi = np.asarray(ibi, dtype=np.float64)
        if ibi.size < 2:
            return 0.0, 0.0, 0.0
        sd1 = float(np.std((ibi[:-1] - ibi[1:]) / np.sqrt(2)))
        sd2 = float(np.std((ibi[:-1] + ibi[1:]) / np.sqrt(2)))
        return sd1, sd2, float(np.pi * sd1 * sd2)

    @staticmethod
    def shannon_entropy(ibi, bins=ENTROPY_BINS):
        counts, _ = np.histogram(ibi, bins=bins)
        return float(entropy(counts, base=2)) if counts.sum() else 0.0


def beat_morphology(window, beats: BeatAnnotations, fs):
    """Per complete beat: times (s), areas above the beat baseline, heights."""
    x = window
    feet = np.asarray(beats.feet)
    peaks = np.asarray(beats.peaks)
    f0, f1 = feet[:-1], feet[1:]
    t1 = (peaks - f0) / fs
    t2 = (f1 - peaks) / fs
    a1, a2, a = [], [], []
    for start, peak, stop in zip(f0, peaks, f1):
        y = x[start:stop + 1] - min(x[start], x[stop])
        rise = peak - start
        a1.append(trapezoid(y[:rise + 1], dx=1.0 / fs))
        a2.append(trapezoid(y[rise:], dx=1.0 / fs))
        a.append(trapezoid(y, dx=1.0 / fs))
    h1 = x[peaks] - x[f0]
    h2 = x[peaks] - x[f1]
    return {
        'T1': t1, 'T2': t2, 'T': (f1 - f0) / fs,
        'RTR': safe_ratio(t1, t2, 'RTR'),
        'A1': np.array(a1), 'A2': np.array(a2), 'A': np.array(a),
        'RAR': safe_ratio(a1, a2, 'RAR'),
        'H1': h1, 'H2': h2,
        'RPR': safe_ratio(h1, h2, 'RPR'),
    }


def extract_window_features(window, beats: BeatAnnotations, fs):
    """The 38 window features in FEATURE_NAMES order."""
    window = np.asarray(window, dtype=np.float64)
    if beats.n_beats < MIN_BEATS:
        raise BeatDetectionError(f"{beats.n_beats} complete beat(s), at least {MIN_BEATS} are needed")
    per_beat = beat_morphology(window, beats, fs)
    per_beat['amplitude'] = np.abs(window)
    ibi_ms = np.diff(np.asarray(beats.all_peaks)) / fs * 1000.0
    per_beat['IBI'] = ibi_ms

    energy = float(np.sum(window ** 2))
    bandwidth = float(safe_ratio(np.sum(np.diff(window) ** 2), energy, 'bandwidth'))
    duration = (beats.feet[-1] - beats.feet[0]) / fs
    sd1, sd2, s = HrvStatistics.poincare(ibi_ms)
    window_values = {
        'SDNN': HrvStatistics.sdnn(ibi_ms),
        'RMSSD': HrvStatistics.rmssd(ibi_ms),
        'pNN20': HrvStatistics.pnn(ibi_ms, 20),
        'pNN50': HrvStatistics.pnn(ibi_ms, 50),
        'energy': energy,
        'time_duration': duration,
        'bandwidth': bandwidth,
        'time_bandwidth_product': duration * bandwidth,
        'heart_rate': float(safe_ratio(60.0, np.mean(ibi_ms) / 1000.0, 'heart_rate')),
        'shannon_entropy': HrvStatistics.shannon_entropy(ibi_ms),
        'S': s,
        'SD1': sd1,
        'SD2': sd2,
    }
    values = ([float(np.mean(per_beat[name])) for name in BEAT_MEAN_FEATURES]
              + [float(np.std(per_beat[name])) for name in BEAT_STD_FEATURES]
              + [window_values[name] for name in WINDOW_FEATURES])
    return np.array(values)
