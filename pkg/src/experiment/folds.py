"""
Fold plans.

PPG mode: a held-out TP group that is never trained on, test slices of TP and
TN taken cyclically from shuffled pools so that every TP and TN reaches a test
set, and a per-fold slice of the UN pool added to training with label 0.

Public mode: the dataset is shuffled once and cut into ninths. Fold k tests on
ninth k, trains on the next four ninths with their true labels (clean segment)
and on the four after that with the run's noisy labels (noisy segment).

Both modes can extend past the requested number of folds with coverage folds,
used only while some sample has not been predicted by any fold.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from src.custom_exception import AccumulationError, FoldQuotaError
from src.experiment.dataset import DatasetPartition

N_NINTHS = 9
MAX_PPG_FOLDS = 100


def derive_seed(seed, *keys):
    return int(np.random.SeedSequence([int(seed)] + [int(k) for k in keys]).generate_state(1)[0])


@dataclass
class FoldPlan:
    fold_index: int
    train_labels: Dict[str, int]
    test_ids: List[str]
    heldout_tp_ids: List[str] = field(default_factory=list)
    predict_ids: List[str] = field(default_factory=list)
    seed: int = 0
    evaluation: bool = True
    clean_ids: List[str] = field(default_factory=list)
    noisy_ids: List[str] = field(default_factory=list)
    un_ids: List[str] = field(default_factory=list)

    @property
    def train_ids(self):
        return list(self.train_labels.keys())


def cyclic_slice(pool, start, size):
    return [pool[(start + i) % len(pool)] for i in range(size)] if pool else []


def covering_plans(make_plan, n_folds, all_ids, max_folds):
    """Evaluation folds 0..n_folds-1, then coverage folds while a sample is unpredicted."""
    plans = [make_plan(k, True) for k in range(n_folds)]
    uncovered = set(all_ids) - {i for plan in plans for i in plan.predict_ids}
    k = n_folds
    while uncovered and k < max_folds:
        plan = make_plan(k, False)
        if uncovered & set(plan.predict_ids):
            plans.append(plan)
            uncovered -= set(plan.predict_ids)
        k += 1
    if uncovered:
        raise AccumulationError(f"{len(uncovered)} sample(s) are never predicted by any fold, "
                                f"e.g. {sorted(uncovered)[:5]}")
    if len(plans) > n_folds:
        logging.info(f"covering_plans: {len(plans) - n_folds} coverage fold(s) added")
    return plans


def split_folds_ppg(partition: DatasetPartition, n_folds=5, seed=0, heldout_tp=3, test_tp=6, test_tn=6,
                    train_un=6, repetition=0) -> List[FoldPlan]:
    tp, tn, un = partition.tp_ids, partition.tn_ids, partition.un_ids
    if heldout_tp + test_tp > len(tp) or test_tn > len(tn) or train_un > len(un):
        raise FoldQuotaError(f"fold quota infeasible: need {heldout_tp} held-out + {test_tp} test TP "
                             f"(have {len(tp)}), {test_tn} test TN (have {len(tn)}), "
                             f"{train_un} train UN (have {len(un)})")
    rng = np.random.default_rng(derive_seed(seed, 101))
    perm_tp = [tp[i] for i in rng.permutation(len(tp))]
    start = (heldout_tp * repetition) % len(perm_tp)
    heldout = cyclic_slice(perm_tp, start, heldout_tp)
    tp_pool = [i for i in perm_tp if i not in set(heldout)]
    tn_pool = [tn[i] for i in rng.permutation(len(tn))]
    un_pool = [un[i] for i in rng.permutation(len(un))]
    all_ids = partition.ids()
    if n_folds * test_tp < len(tp_pool) or n_folds * test_tn < len(tn_pool):
        logging.info(f"split_folds_ppg: {n_folds} folds cannot test every TP/TN, coverage folds follow")

    def make_plan(k, evaluation):
        test_tps = cyclic_slice(tp_pool, k * test_tp, test_tp)
        test_tns = cyclic_slice(tn_pool, k * test_tn, test_tn)
        fold_un = cyclic_slice(un_pool, k * train_un, train_un)
        train = {i: 1 for i in tp_pool if i not in set(test_tps)}
        train.update({i: 0 for i in tn_pool if i not in set(test_tns)})
        train.update({i: 0 for i in fold_un})
        train = dict(sorted(train.items()))
        return FoldPlan(fold_index=k, train_labels=train, test_ids=sorted(test_tps + test_tns),
                        heldout_tp_ids=sorted(heldout), predict_ids=[i for i in all_ids if i not in train],
                        seed=derive_seed(seed, 102, repetition, k), evaluation=evaluation,
                        un_ids=sorted(fold_un))

    return covering_plans(make_plan, n_folds, all_ids, MAX_PPG_FOLDS)


def shuffle_ninths(ids, seed):
    rng = np.random.default_rng(derive_seed(seed, 201))
    ids = sorted(ids)
    perm = [ids[i] for i in rng.permutation(len(ids))]
    return [list(part) for part in np.array_split(np.array(perm, dtype=object), N_NINTHS)]


def split_folds_public(partition: DatasetPartition, noisy_labels: Dict[str, int], n_folds=5, seed=0,
                       ninths=None, excluded_ids=()) -> List[FoldPlan]:
    """
    `noisy_labels` is the run's fixed noisy relabeling, `excluded_ids` are kept
    out of the noisy segments (samples removed by the noise filter).
    """
    all_ids = partition.ids()
    if len(all_ids) < N_NINTHS:
        raise FoldQuotaError(f"public mode needs at least {N_NINTHS} samples, got {len(all_ids)}")
    ninths = ninths or shuffle_ninths(all_ids, seed)
    excluded = set(excluded_ids)

    def make_plan(k, evaluation):
        test = sorted(ninths[k % N_NINTHS])
        clean = sorted(i for j in range(1, 5) for i in ninths[(k + j) % N_NINTHS])
        noisy = sorted(i for j in range(5, 9) for i in ninths[(k + j) % N_NINTHS] if i not in excluded)
        train = {i: partition.true_label(i) for i in clean}
        train.update({i: noisy_labels[i] for i in noisy})
        return FoldPlan(fold_index=k, train_labels=dict(sorted(train.items())), test_ids=test,
                        predict_ids=test, seed=derive_seed(seed, 202, k), evaluation=evaluation,
                        clean_ids=clean, noisy_ids=noisy)

    return covering_plans(make_plan, n_folds, all_ids, N_NINTHS)
