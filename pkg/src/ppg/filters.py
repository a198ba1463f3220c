import numpy as np
from scipy.signal import butter, sosfiltfilt

from src.custom_exception import DatasetFormatError, SignalTooShortError

ORDER = 3
LOW_CUT = 0.6
HIGH_CUT = 5.0
MIN_SAMPLE_RATE = 10.0


def butter_bandpass(fs, lowcut=LOW_CUT, highcut=HIGH_CUT, order=ORDER):
    return butter(order, [lowcut, highcut], btype='band', fs=fs, output='sos')


def bandpass_filter(signal, fs, lowcut=LOW_CUT, highcut=HIGH_CUT, order=ORDER):
    """Zero-phase Butterworth band-pass, output has the input's length."""
    signal = np.asarray(signal, dtype=np.float64)
    if fs <= MIN_SAMPLE_RATE:
        raise DatasetFormatError(f"sample rate must be above {MIN_SAMPLE_RATE} Hz, got {fs}")
    if len(signal) < 3 * order:
        raise SignalTooShortError(f"signal of {len(signal)} samples is shorter than {3 * order} "
                                  f"(3x the filter order)")
    sos = butter_bandpass(fs, lowcut, highcut, order)
    padlen = min(len(signal) - 1, 3 * (2 * len(sos) + 1))
    return sosfiltfilt(sos, signal, padlen=padlen)


def baseline_subtract(stimulation, static):
    static = np.asarray(static, dtype=np.float64)
    if static.size == 0:
        raise SignalTooShortError("static phase is empty, no baseline to subtract")
    return np.asarray(stimulation, dtype=np.float64) - static.mean()
