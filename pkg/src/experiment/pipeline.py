"""
Two-stage training: cross-validate on the given labels, estimate how many of
them to distrust with confidence learning, drop that many of the least
confident candidates, then cross-validate again from fresh models.

PPG mode filters the UN pool (PBNR on UN samples, thresholds from TP and TN).
Public mode filters the samples carrying injected noise out of the noisy
training segments; they stay available as test samples.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from src.experiment.cross_validation import CvResult, StageSettings, rank_summary, rank_uncertain, run_stage
from src.experiment.dataset import TN, TP, DatasetPartition, Sample
from src.experiment.folds import FoldPlan, derive_seed, shuffle_ninths, split_folds_ppg, split_folds_public
from src.experiment.noise_injection import inject_symmetric_noise
from src.log_message import LogMessageSystems, LogMessageTypes, log_message
from src.model.hyper_params import HyperParams
from src.noise.confidence_learning import (ClassThresholds, JointDistribution, NoiseFilterResult, SamplePrediction,
                                           estimate_joint, pbnr_filter, symmetric_filter)
from src.run_config import AblationConditions, NoiseModes, RunModes


@dataclass
class PipelineSettings:
    mode: str
    hp: HyperParams
    seed: int
    n_folds: int = 5
    condition: str = AblationConditions.ENTIRE_TRAINING_SET
    skip_cl: bool = False
    noise_ratio: float = 0.3
    noise_mode: str = NoiseModes.FLIP
    heldout_tp: int = 3
    test_tp: int = 6
    test_tn: int = 6
    train_un: int = 6
    rank_repetitions: int = 1
    rank_top: int = 200
    jobs: int = 1
    keep_checkpoints: bool = True

    @classmethod
    def from_config(cls, config, hp: HyperParams):
        return cls(mode=config.mode, hp=hp, seed=config.seed, n_folds=config.n_folds,
                   condition=config.self_supervision_condition, skip_cl=config.skip_cl,
                   noise_ratio=config.noise_ratio, noise_mode=config.noise_mode, heldout_tp=config.heldout_tp,
                   test_tp=config.test_tp, test_tn=config.test_tn, train_un=config.train_un,
                   rank_repetitions=config.rank_repetitions, rank_top=config.rank_top, jobs=config.jobs)

    @property
    def stage_settings(self):
        return StageSettings(self.hp, self.condition, self.keep_checkpoints)


@dataclass
class StageRun:
    stage: int
    folds: List[FoldPlan]
    cv: CvResult


@dataclass
class NoiseFilterOutcome:
    thresholds: ClassThresholds
    joint: JointDistribution
    result: NoiseFilterResult


@dataclass
class PipelineResult:
    mode: str
    partition: DatasetPartition
    stages: List[StageRun] = field(default_factory=list)
    noise: Optional[NoiseFilterOutcome] = None
    injected_ids: List[str] = field(default_factory=list)
    rank_rows: List[dict] = field(default_factory=list)
    rank_top: int = 200

    @property
    def stage1(self):
        return self.stages[0]

    @property
    def final_stage(self):
        return self.stages[-1]

    @property
    def ranks(self):
        return rank_summary(self.rank_rows, self.rank_top)


def relabel(partition: DatasetPartition, labels: Dict[str, int]) -> DatasetPartition:
    """Same samples with new given labels, true labels kept."""
    samples = {i: Sample(i, s.values, s.group, int(labels.get(i, s.given_label)), partition.true_label(i))
               for i, s in partition.samples.items()}
    return DatasetPartition(partition.mode, samples, list(partition.feature_names))


def predictions(cv: CvResult, partition: DatasetPartition, ids) -> List[SamplePrediction]:
    return [SamplePrediction(i, cv.average(i), partition.given_label(i), partition.samples[i].group) for i in ids]


def inject_public_noise(partition: DatasetPartition, ninths, settings: PipelineSettings):
    """One fixed noisy relabeling per run, an exact count drawn from every ninth."""
    labels = {}
    flipped = []
    for j, ninth in enumerate(ninths):
        injection = inject_symmetric_noise(sorted(ninth), {i: partition.true_label(i) for i in ninth},
                                           settings.noise_ratio, derive_seed(settings.seed, 301, j),
                                           settings.noise_mode)
        labels.update(injection.labels)
        flipped.extend(injection.flipped_ids)
    return labels, sorted(flipped)


def filter_noise(cv: CvResult, partition: DatasetPartition, noisy_ids=None) -> NoiseFilterOutcome:
    """
    PPG mode: thresholds and joint from TP and TN, PBNR over the UN pool.
    Public mode: thresholds and joint from every sample under its trusted
    label, the pool is `noisy_ids` (the stage-1 noisy segments) under the
    noisy labels.
    """
    if partition.mode == RunModes.PPG:
        known = predictions(cv, partition, [i for i in partition.ids() if partition.samples[i].group in (TP, TN)])
        thresholds, joint = estimate_joint(known)
        result = pbnr_filter(predictions(cv, partition, partition.un_ids), joint)
    else:
        trusted = [SamplePrediction(i, cv.average(i), partition.true_label(i), partition.samples[i].group)
                   for i in partition.ids()]
        thresholds, joint = estimate_joint(trusted)
        pool = sorted(noisy_ids) if noisy_ids is not None else partition.ids()
        result = symmetric_filter(predictions(cv, partition, pool), joint)
    log_message(LogMessageTypes.ALL, LogMessageSystems.NOISE_FILTER,
                f"Q = [[{joint.Q[0, 0]:.4f}, {joint.Q[0, 1]:.4f}], [{joint.Q[1, 0]:.4f}, {joint.Q[1, 1]:.4f}]], "
                f"removing {result.n_noise} of {result.pool_size}")
    return NoiseFilterOutcome(thresholds, joint, result)


def _run_ppg(partition: DatasetPartition, settings: PipelineSettings, on_fold) -> PipelineResult:
    outcome = PipelineResult(RunModes.PPG, partition, rank_top=settings.rank_top)
    stage_settings = settings.stage_settings

    def fold_plans(data, repetition=0):
        return split_folds_ppg(data, settings.n_folds, settings.seed, settings.heldout_tp, settings.test_tp,
                               settings.test_tn, settings.train_un, repetition)

    for repetition in range(settings.rank_repetitions):
        folds = fold_plans(partition, repetition)
        log_message(LogMessageTypes.ALL, LogMessageSystems.PIPELINE,
                    f"stage 1, repetition {repetition}: {len(folds)} folds")
        cv = run_stage(partition, folds, stage_settings, 1, settings.jobs,
                       on_fold if repetition == 0 else None)
        if repetition == 0:
            outcome.stages.append(StageRun(1, folds, cv))
        if settings.heldout_tp:
            outcome.rank_rows.extend(rank_uncertain(cv, partition.un_ids, folds[0].heldout_tp_ids, repetition))
    if settings.skip_cl:
        return outcome
    outcome.noise = filter_noise(outcome.stage1.cv, partition)
    reduced = partition.without(outcome.noise.result.removed_ids)
    folds = fold_plans(reduced)
    log_message(LogMessageTypes.ALL, LogMessageSystems.PIPELINE,
                f"stage 2: {len(reduced.un_ids)} UN left of {len(partition.un_ids)}, {len(folds)} folds")
    outcome.stages.append(StageRun(2, folds, run_stage(reduced, folds, stage_settings, 2, settings.jobs, on_fold)))
    return outcome


def _run_public(partition: DatasetPartition, settings: PipelineSettings, on_fold) -> PipelineResult:
    ninths = shuffle_ninths(partition.ids(), settings.seed)
    noisy_labels, flipped = inject_public_noise(partition, ninths, settings)
    noisy = relabel(partition, noisy_labels)
    outcome = PipelineResult(RunModes.PUBLIC, noisy, injected_ids=flipped, rank_top=settings.rank_top)
    log_message(LogMessageTypes.ALL, LogMessageSystems.PIPELINE,
                f"{len(flipped)} of {len(noisy_labels)} labels corrupted ({settings.noise_mode}, "
                f"ratio {settings.noise_ratio})")
    stage_settings = settings.stage_settings
    folds = split_folds_public(noisy, noisy_labels, settings.n_folds, settings.seed, ninths)
    outcome.stages.append(StageRun(1, folds, run_stage(noisy, folds, stage_settings, 1, settings.jobs, on_fold)))
    if settings.skip_cl:
        return outcome
    outcome.noise = filter_noise(outcome.stage1.cv, noisy, {i for plan in folds for i in plan.noisy_ids})
    folds = split_folds_public(noisy, noisy_labels, settings.n_folds, settings.seed, ninths,
                               excluded_ids=outcome.noise.result.removed_ids)
    outcome.stages.append(StageRun(2, folds, run_stage(noisy, folds, stage_settings, 2, settings.jobs, on_fold)))
    return outcome


def two_stage_pipeline(partition: DatasetPartition, settings: PipelineSettings, on_fold=None) -> PipelineResult:
    """
    Stage 1, noise filter, stage 2. With `skip_cl` only stage 1 runs. `on_fold`
    is called with every FoldOutcome of the reported stages, in fold order.
    """
    partition.validate()
    if settings.mode != partition.mode:
        raise ValueError(f"pipeline mode {settings.mode} does not match a {partition.mode} dataset")
    if settings.mode == RunModes.PPG:
        outcome = _run_ppg(partition, settings, on_fold)
    else:
        outcome = _run_public(partition, settings, on_fold)
    for run in outcome.stages:
        (accuracy, accuracy_std), (f1, f1_std) = run.cv.summary()
        logging.info(f"two_stage_pipeline: stage {run.stage} accuracy {accuracy:.4f} +- {accuracy_std:.4f}, "
                     f"f1 {f1:.4f} +- {f1_std:.4f}")
    return outcome
