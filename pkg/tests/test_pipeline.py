from collections import defaultdict

import numpy as np
import pytest

from src.custom_exception import AccumulationError
from src.experiment.cross_validation import (CvResult, StageSettings, pretrain_ids, rank_summary, rank_uncertain,
                                             run_stage)
from src.experiment.folds import split_folds_ppg
from src.experiment.pipeline import PipelineSettings, relabel, two_stage_pipeline
from src.noise.confidence_learning import SamplePrediction, class_thresholds
from src.model.checkpoint import load_checkpoint
from src.run_config import AblationConditions, RunModes
from tests.helpers import make_ppg_partition, make_public_partition, small_hp


def public_settings(**kwargs):
    options = dict(mode=RunModes.PUBLIC, hp=small_hp(), seed=3, keep_checkpoints=False)
    options.update(kwargs)
    return PipelineSettings(**options)


def ppg_settings(**kwargs):
    options = dict(mode=RunModes.PPG, hp=small_hp(), seed=3, n_folds=3, heldout_tp=2, test_tp=2, test_tn=2,
                   train_un=2, keep_checkpoints=False)
    options.update(kwargs)
    return PipelineSettings(**options)


@pytest.fixture(scope='module')
def public_run():
    return two_stage_pipeline(make_public_partition(), public_settings())


@pytest.fixture(scope='module')
def ppg_run():
    return two_stage_pipeline(make_ppg_partition(), ppg_settings())


class TestCvResult:

    def test_average_is_mean(self):
        cv = CvResult(1)
        cv.credit(0, {'a': np.array([0.2, 0.8]), 'b': np.array([0.6, 0.4])})
        cv.credit(1, {'a': np.array([0.4, 0.6])})
        assert cv.counts == {'a': 2, 'b': 1}
        assert cv.average('a').p1 == pytest.approx(0.7)
        assert cv.fold_log[0] == (0, 'a', 0.2, 0.8)
        assert list(cv.accumulated()) == ['a', 'b']

    def test_missing_sample(self):
        cv = CvResult(2)
        with pytest.raises(AccumulationError, match='stage 2'):
            cv.average('x')
        with pytest.raises(AccumulationError):
            cv.require(['x'])

    def test_mean_importance(self):
        cv = CvResult(1, importances=[[('a', 1.0), ('b', 3.0)], [('b', 1.0), ('a', 2.0)]])
        assert cv.mean_importance(['a', 'b']) == [('b', 2.0), ('a', 1.5)]
        assert CvResult(1).mean_importance(['a']) == []


class TestPretrainIds:

    def test_conditions(self, ppg_partition):
        plan = split_folds_ppg(ppg_partition, 3, 0, 2, 2, 2, 2)[0]
        assert pretrain_ids(plan, ppg_partition, AblationConditions.ENTIRE_TRAINING_SET) == plan.train_ids
        assert pretrain_ids(plan, ppg_partition, AblationConditions.WITHOUT_PHASE) == []
        assert pretrain_ids(plan, ppg_partition, AblationConditions.UN_SAMPLES) == plan.un_ids


class TestRanking:

    def test_rank_uncertain(self):
        cv = CvResult(1)
        cv.credit(0, {'UN1': np.array([0.3, 0.7]), 'UN2': np.array([0.9, 0.1]), 'TP1': np.array([0.2, 0.8]),
                      'TP2': np.array([0.7, 0.3]), 'UN3': np.array([0.3, 0.7])})
        rows = rank_uncertain(cv, ['UN1', 'UN2', 'UN3'], ['TP2', 'TP1'], repetition=1)
        assert [(r['sample_id'], r['rank']) for r in rows] == [('TP1', 0), ('TP2', 3)]
        assert all(r['pool_size'] == 5 and r['repetition'] == 1 for r in rows)

    def test_summary(self):
        rows = [dict(repetition=0, rank=1), dict(repetition=0, rank=3), dict(repetition=1, rank=10)]
        summary = rank_summary(rows, top=5)
        assert summary['averages'] == {0: 2.0, 1: 10.0}
        assert summary['overall'] == pytest.approx(14 / 3)
        assert summary['all_within'] is False


class TestPublicPipeline:

    def test_stages(self, public_run):
        assert [run.stage for run in public_run.stages] == [1, 2]
        assert len(public_run.stage1.folds) == 9
        assert len(public_run.stage1.cv.evaluation_metrics) == 5
        assert public_run.noise is not None

    def test_noise_injected_per_ninth(self, public_run):
        assert len(public_run.injected_ids) == 9
        partition = public_run.partition
        flipped = [i for i in partition.ids() if partition.given_label(i) != partition.true_label(i)]
        assert flipped == public_run.injected_ids

    def test_removed_samples_leave_noisy_segments(self, public_run):
        removed = set(public_run.noise.result.removed_ids)
        for plan in public_run.final_stage.folds:
            assert not removed & set(plan.noisy_ids)
        tested = {i for plan in public_run.final_stage.folds for i in plan.test_ids}
        assert tested == set(public_run.partition.ids())

    def test_noise_thresholds_use_trusted_labels(self, public_run):
        partition = public_run.partition
        cv = public_run.stage1.cv
        trusted = [SamplePrediction(i, cv.average(i), partition.true_label(i), partition.samples[i].group)
                   for i in partition.ids()]
        assert public_run.noise.thresholds == class_thresholds(trusted)

    def test_noise_pool_is_noisy_segments(self, public_run):
        pool = {i for plan in public_run.stage1.folds for i in plan.noisy_ids}
        assert public_run.noise.result.pool_size == len(pool)
        assert set(public_run.noise.result.removed_ids) <= pool
        assert set(public_run.noise.result.label_confidences) == pool

    def test_accumulation_matches_fold_log(self, public_run):
        for run in public_run.stages:
            logged = defaultdict(list)
            for _, sample_id, p0, p1 in run.cv.fold_log:
                logged[sample_id].append((p0, p1))
            for sample_id, values in logged.items():
                average = run.cv.average(sample_id)
                assert average.p0 == pytest.approx(np.mean([v[0] for v in values]), abs=1e-12)
                assert average.p1 == pytest.approx(np.mean([v[1] for v in values]), abs=1e-12)

    def test_training_labels_are_noisy_labels(self, public_run):
        partition = public_run.partition
        for plan in public_run.stage1.folds:
            for sample_id in plan.noisy_ids:
                assert plan.train_labels[sample_id] == partition.given_label(sample_id)
            for sample_id in plan.clean_ids:
                assert plan.train_labels[sample_id] == partition.true_label(sample_id)

    def test_deterministic(self, public_run):
        again = two_stage_pipeline(make_public_partition(), public_settings())
        for a, b in zip(public_run.stages, again.stages):
            assert a.cv.fold_log == b.cv.fold_log
        assert again.noise.result.removed_ids == public_run.noise.result.removed_ids

    def test_skip_cl(self):
        result = two_stage_pipeline(make_public_partition(), public_settings(skip_cl=True, noise_ratio=0.0))
        assert len(result.stages) == 1
        assert result.noise is None
        assert result.injected_ids == []

    def test_mode_mismatch(self):
        with pytest.raises(ValueError):
            two_stage_pipeline(make_public_partition(), ppg_settings())


class TestPpgPipeline:

    def test_stages(self, ppg_run):
        assert [run.stage for run in ppg_run.stages] == [1, 2]
        assert len(ppg_run.stage1.cv.evaluation_metrics) == 3

    def test_removal_is_bounded(self, ppg_run):
        removed = ppg_run.noise.result.removed_ids
        partition = ppg_run.partition
        assert set(removed) <= set(partition.un_ids)
        assert len(removed) <= round(len(partition.un_ids) * 6 / 14)
        assert ppg_run.noise.result.pool_size == len(partition.un_ids)

    def test_stage2_uses_remaining_un(self, ppg_run):
        removed = set(ppg_run.noise.result.removed_ids)
        stage1_un = {i for plan in ppg_run.stage1.folds for i in plan.predict_ids + plan.train_ids
                     if ppg_run.partition.samples[i].group == 'UN'}
        stage2_un = {i for plan in ppg_run.final_stage.folds for i in plan.predict_ids + plan.train_ids
                     if ppg_run.partition.samples[i].group == 'UN'}
        assert stage2_un <= stage1_un
        assert not stage2_un & removed
        assert stage2_un == stage1_un - removed

    def test_no_leakage(self, ppg_run):
        for run in ppg_run.stages:
            for plan in run.folds:
                assert not set(plan.train_ids) & set(plan.test_ids)
                assert not set(plan.train_ids) & set(plan.heldout_tp_ids)

    def test_rank_rows(self, ppg_run):
        rows = ppg_run.rank_rows
        assert len(rows) == 2
        assert all(0 <= row['rank'] < row['pool_size'] == 12 for row in rows)
        assert ppg_run.ranks['top'] == 200

    def test_rank_repetitions(self):
        result = two_stage_pipeline(make_ppg_partition(), ppg_settings(rank_repetitions=2, skip_cl=True))
        assert [row['repetition'] for row in result.rank_rows] == [0, 0, 1, 1]
        assert len(result.stages) == 1
        heldout = [{row['sample_id'] for row in result.rank_rows if row['repetition'] == r} for r in (0, 1)]
        assert not heldout[0] & heldout[1]

    def test_planted_positives_rank_above_other_un(self):
        planted, others = [], []
        for seed in range(3):
            partition = make_ppg_partition(seed=seed)
            result = two_stage_pipeline(partition, ppg_settings(seed=seed, skip_cl=True))
            for sample_id in partition.un_ids:
                p1 = result.stage1.cv.average(sample_id).p1
                (planted if partition.true_label(sample_id) == 1 else others).append(p1)
        assert np.mean(planted) > np.mean(others)

    def test_ablation_conditions_run(self):
        for condition in (AblationConditions.WITHOUT_PHASE, AblationConditions.UN_SAMPLES):
            result = two_stage_pipeline(make_ppg_partition(), ppg_settings(condition=condition, skip_cl=True))
            assert len(result.stage1.cv.fold_metrics) >= 3


class TestRunStage:

    def test_callback_and_checkpoints(self, ppg_partition):
        folds = split_folds_ppg(ppg_partition, 3, 0, 2, 2, 2, 2)
        seen = []
        cv = run_stage(ppg_partition, folds, StageSettings(small_hp()), stage=1, on_fold=seen.append)
        assert [o.plan.fold_index for o in seen] == [p.fold_index for p in folds]
        assert all(o.stage == 1 for o in seen)
        model = load_checkpoint(seen[0].checkpoint)
        assert model.hp == small_hp()
        assert len(cv.fold_metrics) == len(folds)

    def test_threads_match_serial(self, ppg_partition):
        folds = split_folds_ppg(ppg_partition, 3, 0, 2, 2, 2, 2)
        settings = StageSettings(small_hp(), keep_checkpoints=False)
        serial = run_stage(ppg_partition, folds, settings, jobs=1)
        threaded = run_stage(ppg_partition, folds, settings, jobs=2)
        assert serial.fold_log == threaded.fold_log

    def test_relabel_keeps_true_labels(self, public_partition):
        noisy = relabel(public_partition, {'s_00000': 1})
        assert noisy.given_label('s_00000') == 1
        assert noisy.true_label('s_00000') == 0
        assert public_partition.given_label('s_00000') == 0
