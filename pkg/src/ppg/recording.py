import os
from dataclasses import dataclass

import numpy as np

from src.custom_exception import DatasetFormatError

RECORDING_EXT = '.ppg'


@dataclass
class RawRecording:
    subject_id: str
    sample_rate: float
    static_phase: np.ndarray
    stimulation_phase: np.ndarray

    def validate(self):
        if not self.sample_rate > 0:
            raise DatasetFormatError(f"{self.subject_id}: sample rate must be positive, got {self.sample_rate}")
        for name, phase in (('static', self.static_phase), ('stimulation', self.stimulation_phase)):
            if len(phase) == 0:
                raise DatasetFormatError(f"{self.subject_id}: {name} phase is empty")
            if not np.all(np.isfinite(phase)):
                raise DatasetFormatError(f"{self.subject_id}: {name} phase contains NaN or infinite samples")
        return self


def read_recording(path) -> RawRecording:
    """
    Line 1 `fs=<Hz>`, line 2 static-phase samples, line 3 stimulation-phase
    samples, space separated.
    """
    subject_id = os.path.splitext(os.path.basename(path))[0]
    with open(path, 'r', encoding='utf-8') as file:
        lines = [line.strip() for line in file.read().splitlines() if line.strip()]
    if len(lines) != 3:
        raise DatasetFormatError(f"{path}: expected 3 lines (fs, static, stimulation), found {len(lines)}")
    key, _, value = lines[0].partition('=')
    if key.strip() != 'fs':
        raise DatasetFormatError(f"{path}: first line must be 'fs=<Hz>', got '{lines[0]}'")
    try:
        fs = float(value)
        static = np.array(lines[1].split(), dtype=np.float64)
        stimulation = np.array(lines[2].split(), dtype=np.float64)
    except ValueError as e:
        raise DatasetFormatError(f"{path}: {format(e)}")
    return RawRecording(subject_id, fs, static, stimulation).validate()


def format_samples(samples, fmt='%.6g'):
    return ' '.join(fmt % s for s in samples)


def write_recording(path, recording: RawRecording):
    fs = recording.sample_rate
    fs_text = str(int(fs)) if float(fs).is_integer() else repr(float(fs))
    with open(path, 'w', encoding='utf-8', newline='\n') as file:
        file.write(f"fs={fs_text}\n")
        file.write(format_samples(recording.static_phase) + '\n')
        file.write(format_samples(recording.stimulation_phase) + '\n')


def list_recordings(folder):
    return sorted(os.path.join(folder, name) for name in os.listdir(folder) if name.endswith(RECORDING_EXT))
