"""
Synthetic PPG recordings standing in for a private cohort.

Each beat is an asymmetric pulse: a raised-cosine rise followed by an
exponential decay. Beats follow a heart-rate curve with Gaussian IBI jitter.
The positive profile has small jitter (low HRV) and a heart-rate response to
the stimulation phase; the negative profile has large jitter and no response.
Baseline wander and low broadband noise are added on top.
"""
import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from src.custom_exception import ConfigError
from src.ppg.features import HrvStatistics
from src.ppg.recording import RawRecording

MIN_BPM = 40
MAX_BPM = 180
RISE_S = 0.15
DECAY_S = 0.18

POSITIVE = 'positive'
NEGATIVE = 'negative'


@dataclass(frozen=True)
class SyntheticProfile:
    label: str = NEGATIVE
    bpm_mean: float = 70.0
    bpm_std: float = 6.0
    ibi_jitter_s: float = 0.05
    response_bpm: float = 0.0
    drift_bpm: float = 2.0
    amplitude: float = 1.0
    wander: float = 0.1
    noise: float = 0.02

    def validate(self):
        problems = []
        if not MIN_BPM <= self.bpm_mean <= MAX_BPM:
            problems.append(f"bpm must be in [{MIN_BPM}, {MAX_BPM}], got {self.bpm_mean}")
        if self.bpm_std < 0 or self.ibi_jitter_s < 0 or self.noise < 0:
            problems.append("bpm_std, ibi_jitter_s and noise must be non-negative")
        if self.label not in (POSITIVE, NEGATIVE):
            problems.append(f"class must be {POSITIVE} or {NEGATIVE}, got {self.label!r}")
        if problems:
            raise ConfigError(problems)
        return self


def profile_for(label, **overrides):
    if label not in (POSITIVE, NEGATIVE):
        raise ConfigError(f"class must be {POSITIVE} or {NEGATIVE}, got {label!r}")
    if label == POSITIVE:
        base = SyntheticProfile(label=POSITIVE, ibi_jitter_s=0.015, response_bpm=10.0)
    else:
        base = SyntheticProfile(label=NEGATIVE, ibi_jitter_s=0.05, response_bpm=0.0)
    return replace(base, **{k: v for k, v in overrides.items() if v is not None}).validate()


@dataclass
class SyntheticTruth:
    subject_id: str
    label: str
    planted: bool
    bpm: float
    mean_ibi_s: float
    sdnn_ms: float
    heart_rate: float

    def to_line(self):
        return (f"{self.subject_id} {self.label} {int(self.planted)} {'%.6f' % self.mean_ibi_s} "
                f"{'%.6f' % self.sdnn_ms} {'%.6f' % self.heart_rate}")


@dataclass
class SyntheticRecording:
    recording: RawRecording
    truth: SyntheticTruth
    peak_times: np.ndarray


def beat_template(phase, rise=RISE_S, decay=DECAY_S):
    rising = 0.5 * (1 - np.cos(np.pi * np.clip(phase, 0, rise) / rise))
    falling = np.exp(-(phase - rise) / decay)
    return np.where(phase < rise, rising, falling)


def beat_onsets(duration_s, bpm_curve, jitter_s, rng):
    onsets = []
    t = -rng.uniform(0, 60.0 / bpm_curve(0.0))
    while t < duration_s:
        onsets.append(t)
        ibi = 60.0 / bpm_curve(max(t, 0.0)) + rng.normal(0, jitter_s)
        t += float(np.clip(ibi, 60.0 / MAX_BPM, 60.0 / MIN_BPM))
    return np.array(onsets)


def render_pulses(onsets, amplitudes, n_samples, fs):
    t = np.arange(n_samples) / fs
    index = np.searchsorted(onsets, t, side='right') - 1
    phase = t - onsets[np.clip(index, 0, None)]
    return np.where(index >= 0, amplitudes[np.clip(index, 0, None)] * beat_template(phase), 0.0)


def generate_phase(duration_s, fs, bpm_curve, profile: SyntheticProfile, rng):
    n_samples = int(round(duration_s * fs))
    onsets = beat_onsets(duration_s, bpm_curve, profile.ibi_jitter_s, rng)
    amplitudes = profile.amplitude * (1 + 0.05 * rng.standard_normal(len(onsets)))
    signal = render_pulses(onsets, amplitudes, n_samples, fs)
    t = np.arange(n_samples) / fs
    signal += profile.wander * np.sin(2 * np.pi * 0.1 * t + rng.uniform(0, 2 * np.pi))
    signal += profile.noise * rng.standard_normal(n_samples)
    peaks = onsets + RISE_S
    return signal, peaks[(peaks >= 0) & (peaks < duration_s)]


def generate_synthetic_ppg(profile: SyntheticProfile, static_s=180.0, stimulation_s=300.0, fs=100.0,
                           seed=0, subject_id: Optional[str] = None, planted=False) -> SyntheticRecording:
    profile.validate()
    rng = np.random.default_rng(seed)
    bpm = float(np.clip(rng.normal(profile.bpm_mean, profile.bpm_std) if profile.bpm_std else profile.bpm_mean,
                        MIN_BPM, MAX_BPM))
    drift_phase = rng.uniform(0, 2 * np.pi)
    response_onset = rng.uniform(0.2, 0.4) * stimulation_s

    def static_curve(t):
        return bpm + profile.drift_bpm * np.sin(2 * np.pi * t / 120.0 + drift_phase)

    def stimulation_curve(t):
        response = profile.response_bpm / (1 + np.exp(-(t - response_onset) / 15.0))
        return float(np.clip(static_curve(t) + response, MIN_BPM, MAX_BPM))

    static, _ = generate_phase(static_s, fs, static_curve, profile, rng)
    stimulation, peaks = generate_phase(stimulation_s, fs, stimulation_curve, profile, rng)
    ibi_s = np.diff(peaks)
    subject_id = subject_id or f"synthetic_{seed}"
    mean_ibi = float(np.mean(ibi_s)) if ibi_s.size else float('nan')
    truth = SyntheticTruth(subject_id, profile.label, planted, bpm, mean_ibi,
                           HrvStatistics.sdnn(ibi_s * 1000.0), 60.0 / mean_ibi)
    recording = RawRecording(subject_id, fs, static, stimulation).validate()
    logging.debug(f"generate_synthetic_ppg: {subject_id} {profile.label} bpm {bpm:.1f} "
                  f"mean IBI {mean_ibi:.4f}s SDNN {truth.sdnn_ms:.2f}ms")
    return SyntheticRecording(recording, truth, peaks)


@dataclass
class CohortMember:
    synthetic: SyntheticRecording
    group: str


def generate_cohort(n_tp=30, n_tn=21, n_un=200, planted_fraction=0.1, seed=0, static_s=180.0,
                    stimulation_s=300.0, fs=100.0, bpm_mean=None):
    """
    TP from the positive profile, TN from the negative one, UN negative except a
    planted fraction drawn from the positive profile.
    """
    rng = np.random.default_rng(seed)
    n_planted = int(np.floor(n_un * planted_fraction + 0.5))
    planted = set(rng.choice(n_un, size=n_planted, replace=False).tolist()) if n_planted else set()
    members = []
    plan = ([('TP', POSITIVE, i, False) for i in range(n_tp)]
            + [('TN', NEGATIVE, i, False) for i in range(n_tn)]
            + [('UN', POSITIVE if i in planted else NEGATIVE, i, i in planted) for i in range(n_un)])
    for index, (group, label, number, is_planted) in enumerate(plan):
        subject_id = f"{group}{number + 1:03d}"
        synthetic = generate_synthetic_ppg(profile_for(label, bpm_mean=bpm_mean), static_s, stimulation_s, fs,
                                           seed=[seed, index], subject_id=subject_id, planted=is_planted)
        members.append(CohortMember(synthetic, group))
    return members
