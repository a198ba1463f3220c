import numpy as np

from src.custom_exception import InsufficientWindowsError

WINDOW_SECONDS = 20
OVERLAP = 0.8
CLIP_TO = 70


def window_geometry(fs, window_s=WINDOW_SECONDS, overlap=OVERLAP):
    """Window and hop lengths in samples."""
    width = int(round(window_s * fs))
    hop = int(round(window_s * (1 - overlap) * fs))
    return width, max(hop, 1)


def window_count(n_samples, width, hop):
    if n_samples < width:
        return 0
    return (n_samples - width) // hop + 1


def segment_windows(signal, fs, window_s=WINDOW_SECONDS, overlap=OVERLAP, clip_to=CLIP_TO):
    """First `clip_to` windows at offsets 0, hop, 2*hop, ... as an (n, width) array."""
    signal = np.asarray(signal, dtype=np.float64)
    width, hop = window_geometry(fs, window_s, overlap)
    available = window_count(len(signal), width, hop)
    if available < clip_to:
        raise InsufficientWindowsError(available, clip_to)
    starts = np.arange(clip_to) * hop
    return np.stack([signal[s:s + width] for s in starts])
