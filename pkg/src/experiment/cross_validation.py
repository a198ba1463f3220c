import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from src.custom_exception import AccumulationError
from src.experiment.dataset import UN, DatasetPartition
from src.experiment.folds import FoldPlan, derive_seed
from src.experiment.metrics import mean_std, metrics
from src.kernel.prob_pair import ProbPair
from src.model.checkpoint import save_checkpoint
from src.model.hyper_params import HyperParams
from src.model.tnanet import Tnanet, feature_importance
from src.run_config import AblationConditions
from src.worker_thread import run_workers


@dataclass
class FoldMetrics:
    fold_index: int
    evaluation: bool
    accuracy: float
    f1: float
    epochs: int
    final_loss: float


@dataclass
class FoldOutcome:
    plan: FoldPlan
    stage: int
    predictions: Dict[str, np.ndarray]
    metrics: FoldMetrics
    importance: List[tuple]
    checkpoint: bytes = b''


@dataclass
class CvResult:
    stage: int
    sums: Dict[str, np.ndarray] = field(default_factory=dict)
    counts: Dict[str, int] = field(default_factory=dict)
    fold_log: List[tuple] = field(default_factory=list)
    fold_metrics: List[FoldMetrics] = field(default_factory=list)
    importances: List[List[tuple]] = field(default_factory=list)

    def credit(self, fold_index, predictions):
        for sample_id in sorted(predictions):
            probs = np.asarray(predictions[sample_id], dtype=np.float64)
            self.sums[sample_id] = self.sums.get(sample_id, np.zeros(2)) + probs
            self.counts[sample_id] = self.counts.get(sample_id, 0) + 1
            self.fold_log.append((fold_index, sample_id, float(probs[0]), float(probs[1])))

    def average(self, sample_id, given_label=None) -> ProbPair:
        if self.counts.get(sample_id, 0) == 0:
            raise AccumulationError(f"stage {self.stage}: sample {sample_id} has no accumulated prediction")
        return ProbPair.from_array(self.sums[sample_id] / self.counts[sample_id], given_label)

    def accumulated(self):
        return {i: self.average(i) for i in sorted(self.counts)}

    def require(self, ids):
        missing = [i for i in ids if self.counts.get(i, 0) == 0]
        if missing:
            raise AccumulationError(f"stage {self.stage}: {len(missing)} sample(s) without accumulated "
                                    f"predictions, e.g. {missing[:5]}")

    @property
    def evaluation_metrics(self):
        return [m for m in self.fold_metrics if m.evaluation]

    def summary(self):
        evaluated = self.evaluation_metrics
        accuracy = mean_std([m.accuracy for m in evaluated])
        f1 = mean_std([m.f1 for m in evaluated])
        return accuracy, f1

    def mean_importance(self, names):
        if not self.importances:
            return []
        scores = {name: 0.0 for name in names}
        for ranking in self.importances:
            for name, score in ranking:
                scores[name] += score / len(self.importances)
        order = sorted(range(len(names)), key=lambda d: (-scores[names[d]], d))
        return [(names[d], scores[names[d]]) for d in order]


@dataclass
class StageSettings:
    hp: HyperParams
    condition: str = AblationConditions.ENTIRE_TRAINING_SET
    keep_checkpoints: bool = True


def pretrain_ids(plan: FoldPlan, partition: DatasetPartition, condition):
    if condition == AblationConditions.WITHOUT_PHASE:
        return []
    if condition == AblationConditions.UN_SAMPLES:
        return [i for i in plan.train_ids if partition.samples[i].group == UN]
    return plan.train_ids


def train_fold(partition: DatasetPartition, plan: FoldPlan, settings: StageSettings, stage) -> FoldOutcome:
    model_seed = derive_seed(plan.seed, stage)
    model = Tnanet(settings.hp, seed=model_seed)
    pre_ids = pretrain_ids(plan, partition, settings.condition)
    if pre_ids:
        model.pretrain(partition.matrices(pre_ids), seed=model_seed)
    result = model.fit(partition.matrices(plan.train_ids), list(plan.train_labels.values()))
    probs = model.predict_proba(partition.matrices(plan.predict_ids))
    predictions = dict(zip(plan.predict_ids, probs))
    y_true = [partition.true_label(i) for i in plan.test_ids]
    y_pred = [ProbPair.from_array(predictions[i]).predict_label() for i in plan.test_ids]
    accuracy, f1 = metrics(y_true, y_pred)
    logging.info(f"stage {stage} fold {plan.fold_index}: accuracy {accuracy:.4f} f1 {f1:.4f} "
                 f"({result.epochs} epochs, loss {result.final_loss:.5f})")
    return FoldOutcome(plan, stage, predictions,
                       FoldMetrics(plan.fold_index, plan.evaluation, accuracy, f1, result.epochs, result.final_loss),
                       feature_importance(model),
                       save_checkpoint(model) if settings.keep_checkpoints else b'')


def run_stage(partition: DatasetPartition, folds: List[FoldPlan], settings: StageSettings, stage=1, jobs=1,
              on_fold=None) -> CvResult:
    """
    Train every fold, credit its predictions of the samples it did not train on,
    and check that every sample of the partition was predicted at least once.
    Outcomes are aggregated in fold order whatever the number of jobs.
    """
    outcomes = run_workers(train_fold, jobs, [(partition, plan, settings, stage) for plan in folds])
    cv = CvResult(stage)
    for outcome in outcomes:
        cv.credit(outcome.plan.fold_index, outcome.predictions)
        cv.fold_metrics.append(outcome.metrics)
        if outcome.plan.evaluation:
            cv.importances.append(outcome.importance)
        if on_fold is not None:
            on_fold(outcome)
    cv.require(partition.ids())
    return cv


def rank_uncertain(cv: CvResult, un_ids, heldout_tp_ids, repetition=0) -> List[dict]:
    """Pool UN and held-out TP by accumulated p1, highest first, ties by id; ranks are 0-based."""
    pool = sorted(set(un_ids) | set(heldout_tp_ids))
    cv.require(pool)
    ranked = sorted(pool, key=lambda i: (-cv.average(i).p1, i))
    position = {sample_id: rank for rank, sample_id in enumerate(ranked)}
    return [dict(repetition=repetition, sample_id=i, p1=cv.average(i).p1, rank=position[i], pool_size=len(pool))
            for i in sorted(heldout_tp_ids)]


def rank_summary(rows, top=200) -> Dict[Optional[int], float]:
    by_repetition = {}
    for row in rows:
        by_repetition.setdefault(row['repetition'], []).append(row['rank'])
    averages = {r: float(np.mean(ranks)) for r, ranks in sorted(by_repetition.items())}
    overall = float(np.mean([row['rank'] for row in rows])) if rows else float('nan')
    return dict(averages=averages, overall=overall, all_within=all(row['rank'] < top for row in rows), top=top)
