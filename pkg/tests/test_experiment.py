import logging
from collections import Counter

import numpy as np
import pytest

from src.custom_exception import ConfigError, DatasetFormatError, FoldQuotaError
from src.experiment.dataset import (GROUND_TRUTH_FILE, GROUPS_FILE, TP, UN, DatasetPartition, Sample,
                                    load_ppg_dataset, load_public_dataset, parse_public_line, read_groups)
from src.experiment.folds import derive_seed, shuffle_ninths, split_folds_ppg, split_folds_public
from src.experiment.metrics import mean_std, metrics
from src.experiment.noise_injection import inject_symmetric_noise
from src.experiment.ts_converter import format_sample
from src.ppg.feature_matrix import FeatureMatrix, write_feature_file
from src.run_config import NoiseModes
from tests.helpers import make_ppg_partition, make_public_partition


def check_no_leakage(plans):
    for plan in plans:
        train = set(plan.train_ids)
        assert not train & set(plan.test_ids)
        assert not train & set(plan.heldout_tp_ids)
        assert not set(plan.test_ids) & set(plan.heldout_tp_ids)
        assert not train & set(plan.predict_ids)


class TestPartition:

    def test_groups(self, ppg_partition):
        assert ppg_partition.tp_ids[:2] == ['TP001', 'TP002']
        assert len(ppg_partition.un_ids) == 10
        assert ppg_partition.shape == (3, 16)
        assert ppg_partition.given_label('UN001') == 0
        assert ppg_partition.true_label('UN001') == 1

    def test_without(self, ppg_partition):
        smaller = ppg_partition.without(['UN001', 'UN002'])
        assert len(smaller.un_ids) == 8
        assert 'UN001' in ppg_partition.samples
        assert smaller.feature_names == ppg_partition.feature_names

    def test_validate_shapes(self):
        samples = {'a': Sample('a', np.zeros((2, 4)), TP, 1), 'b': Sample('b', np.zeros((2, 5)), TP, 1)}
        with pytest.raises(DatasetFormatError):
            DatasetPartition('ppg', samples).validate()

    def test_validate_label(self):
        with pytest.raises(DatasetFormatError):
            DatasetPartition('public', {'a': Sample('a', np.zeros((2, 4)), 'DATA', 2)}).validate()


class TestDatasetFiles:

    def test_load_public(self, tmp_path):
        (tmp_path / 'train.txt').write_text('1;0,1,2;3,3,3\n0;2,1,0;1,2,5\n')
        (tmp_path / 'notes.md').write_text('ignored')
        partition = load_public_dataset(str(tmp_path))
        assert partition.ids() == ['train_00000', 'train_00001']
        assert partition.given_label('train_00000') == 1
        np.testing.assert_allclose(partition.samples['train_00000'].values, [[0.0, 0.5, 1.0], [0.5, 0.5, 0.5]])
        assert partition.feature_names == ['channel_0', 'channel_1']

    def test_load_public_raw(self, tmp_path):
        (tmp_path / 'a.txt').write_text('0;1,2\n')
        partition = load_public_dataset(str(tmp_path), normalize=False)
        np.testing.assert_array_equal(partition.samples['a_00000'].values, [[1.0, 2.0]])

    def test_sample_line_keeps_full_precision(self, rng):
        values = rng.normal(size=(2, 5)) * 1e-3 + np.array([[1.0 / 3.0], [np.pi]])
        line = format_sample(np.int64(1), values)
        label, parsed = parse_public_line(line, 'line')
        assert label == 1
        np.testing.assert_array_equal(parsed, values)

    def test_unequal_channels(self, tmp_path):
        (tmp_path / 'a.txt').write_text('0;1,2;3\n')
        with pytest.raises(DatasetFormatError, match='a.txt:1'):
            load_public_dataset(str(tmp_path))

    def test_no_files(self, tmp_path):
        with pytest.raises(DatasetFormatError):
            load_public_dataset(str(tmp_path))

    def test_load_ppg(self, tmp_path):
        names = ['f0', 'f1']
        rng = np.random.default_rng(0)
        for subject_id in ('TP001', 'TN001', 'UN001'):
            write_feature_file(tmp_path / f"{subject_id}.features",
                               FeatureMatrix(rng.uniform(size=(2, 5)), names, subject_id))
        (tmp_path / GROUPS_FILE).write_text('# subject group\nTP001 TP\nTN001 TN\nUN001 UN\n')
        (tmp_path / GROUND_TRUTH_FILE).write_text('# header\nUN001 positive 1 0.8 40 75\nTN001 negative 0 1 2 3\n')
        partition = load_ppg_dataset(str(tmp_path))
        assert partition.ids() == ['TN001', 'TP001', 'UN001']
        assert partition.given_label('TP001') == 1
        assert partition.given_label('UN001') == 0
        assert partition.true_label('UN001') == 1
        assert partition.true_label('TP001') == 1
        assert partition.feature_names == names

    def test_missing_feature_file(self, tmp_path):
        (tmp_path / GROUPS_FILE).write_text('TP001 TP\n')
        with pytest.raises(DatasetFormatError, match='TP001'):
            load_ppg_dataset(str(tmp_path))

    def test_bad_group(self, tmp_path):
        path = tmp_path / GROUPS_FILE
        path.write_text('TP001 XX\n')
        with pytest.raises(DatasetFormatError):
            read_groups(str(path))


class TestPpgFolds:

    @pytest.fixture
    def cohort(self):
        return make_ppg_partition(n_tp=30, n_tn=21, n_un=200, n_planted=0, n_windows=4)

    def test_default_quota(self, cohort):
        plans = split_folds_ppg(cohort, n_folds=5, seed=1)
        assert len(plans) == 5
        check_no_leakage(plans)
        for plan in plans:
            labels = list(plan.train_labels.values())
            assert len(plan.train_ids) == 42
            assert labels.count(1) == 21
            assert len(plan.un_ids) == 6
            assert len(plan.test_ids) == 12
            assert len(plan.heldout_tp_ids) == 3
            assert not set(plan.test_ids) & set(cohort.un_ids)
            assert all(cohort.samples[i].group != UN or label == 0 for i, label in plan.train_labels.items())
        heldout = set(plans[0].heldout_tp_ids)
        assert all(set(plan.heldout_tp_ids) == heldout for plan in plans)
        tested = {i for plan in plans for i in plan.test_ids}
        assert tested == (set(cohort.tp_ids) - heldout) | set(cohort.tn_ids)

    def test_every_sample_predicted(self, cohort):
        plans = split_folds_ppg(cohort, n_folds=5, seed=1)
        assert {i for plan in plans for i in plan.predict_ids} == set(cohort.ids())

    def test_repetitions_rotate_heldout(self, cohort):
        first = split_folds_ppg(cohort, seed=1, repetition=0)[0].heldout_tp_ids
        second = split_folds_ppg(cohort, seed=1, repetition=1)[0].heldout_tp_ids
        assert not set(first) & set(second)

    def test_seeded(self, cohort):
        a = split_folds_ppg(cohort, seed=3)
        b = split_folds_ppg(cohort, seed=3)
        assert [p.train_labels for p in a] == [p.train_labels for p in b]
        assert [p.seed for p in a] == [p.seed for p in b]

    def test_coverage_folds(self):
        partition = make_ppg_partition(n_tp=20, n_tn=6, n_un=4, n_planted=0)
        plans = split_folds_ppg(partition, n_folds=2, seed=0, heldout_tp=3, test_tp=2, test_tn=2, train_un=2)
        assert len(plans) == 9
        assert [p.evaluation for p in plans] == [True, True] + [False] * 7
        assert {i for plan in plans for i in plan.predict_ids} == set(partition.ids())
        check_no_leakage(plans)

    def test_quota_infeasible(self):
        with pytest.raises(FoldQuotaError):
            split_folds_ppg(make_ppg_partition(n_tp=5), n_folds=5)


class TestPublicFolds:

    @pytest.fixture
    def partition(self):
        return make_public_partition(n=90, n_windows=4)

    def test_ninths(self, partition):
        ninths = shuffle_ninths(partition.ids(), 0)
        assert len(ninths) == 9
        assert all(len(n) == 10 for n in ninths)
        assert sorted(i for n in ninths for i in n) == partition.ids()
        assert shuffle_ninths(partition.ids(), 0) == ninths

    def test_rotation(self, partition):
        noisy = inject_symmetric_noise(partition.ids(), {i: partition.true_label(i) for i in partition.ids()},
                                       0.3, 5).labels
        plans = split_folds_public(partition, noisy, n_folds=5, seed=0)
        assert len(plans) == 9
        assert [p.evaluation for p in plans] == [True] * 5 + [False] * 4
        check_no_leakage(plans)
        tests = [set(p.test_ids) for p in plans]
        for a in range(9):
            for b in range(a + 1, 9):
                assert not tests[a] & tests[b]
        assert set().union(*tests) == set(partition.ids())
        for plan in plans:
            assert (len(plan.clean_ids), len(plan.noisy_ids), len(plan.test_ids)) == (40, 40, 10)
            assert all(plan.train_labels[i] == partition.true_label(i) for i in plan.clean_ids)
            assert all(plan.train_labels[i] == noisy[i] for i in plan.noisy_ids)

    def test_excluded_ids_stay_out_of_noisy_segments(self, partition):
        labels = {i: partition.true_label(i) for i in partition.ids()}
        ninths = shuffle_ninths(partition.ids(), 0)
        excluded = ninths[5][:3]
        plans = split_folds_public(partition, labels, seed=0, ninths=ninths, excluded_ids=excluded)
        assert len(plans[0].noisy_ids) == 37
        assert not set(excluded) & set(plans[0].train_ids)
        assert set(excluded) <= {i for plan in plans for i in plan.test_ids}

    def test_too_few_samples(self):
        partition = make_public_partition(n=8)
        with pytest.raises(FoldQuotaError):
            split_folds_public(partition, {i: 0 for i in partition.ids()})


class TestNoiseInjection:

    @staticmethod
    def balanced(n):
        ids = [f"s{k:03d}" for k in range(n)]
        return ids, {i: k % 2 for k, i in enumerate(ids)}

    def test_exact_flip_count(self):
        ids, labels = self.balanced(40)
        injection = inject_symmetric_noise(ids, labels, 0.3, seed=1)
        assert len(injection.selected_ids) == 12
        assert injection.n_flipped == 12
        assert sum(injection.labels[i] != labels[i] for i in ids) / len(ids) == pytest.approx(12 / 40)

    def test_realized_rate(self, rng):
        for _ in range(20):
            n = int(rng.integers(1, 200))
            ratio = float(rng.uniform())
            ids, labels = self.balanced(n)
            injection = inject_symmetric_noise(ids, labels, ratio, seed=int(rng.integers(1000)))
            assert injection.n_flipped == int(np.floor(ratio * n + 0.5))

    def test_shuffle_preserves_label_multiset(self):
        ids, labels = self.balanced(40)
        injection = inject_symmetric_noise(ids, labels, 0.5, seed=2, mode=NoiseModes.SHUFFLE)
        assert Counter(injection.labels.values()) == Counter(labels.values())
        selected = injection.selected_ids
        assert Counter(injection.labels[i] for i in selected) == Counter(labels[i] for i in selected)

    def test_zero_ratio(self):
        ids, labels = self.balanced(10)
        assert inject_symmetric_noise(ids, labels, 0.0, seed=0).labels == labels

    def test_seeded(self):
        ids, labels = self.balanced(30)
        assert inject_symmetric_noise(ids, labels, 0.3, 7) == inject_symmetric_noise(ids, labels, 0.3, 7)

    @pytest.mark.parametrize('ratio, mode', [(1.5, NoiseModes.FLIP), (-0.1, NoiseModes.FLIP), (0.3, 'swap')])
    def test_invalid(self, ratio, mode):
        ids, labels = self.balanced(10)
        with pytest.raises(ConfigError):
            inject_symmetric_noise(ids, labels, ratio, 0, mode)


class TestSeeds:

    def test_derive_seed(self):
        assert derive_seed(1, 101) == derive_seed(1, 101)
        assert derive_seed(1, 101) != derive_seed(1, 102)
        assert derive_seed(1, 202, 0) != derive_seed(2, 202, 0)


class TestMetrics:

    def test_all_correct(self):
        assert metrics([0, 1, 1, 0], [0, 1, 1, 0]) == (1.0, 1.0)

    def test_all_negative_predictions(self, caplog):
        with caplog.at_level(logging.WARNING):
            accuracy, f1 = metrics([0, 1, 0, 1], [0, 0, 0, 0])
        assert accuracy == 0.5
        assert f1 == 0.0
        assert 'undefined' in caplog.text

    def test_hand_counts(self):
        accuracy, f1 = metrics([1, 1, 1, 0, 1, 1], [1, 1, 1, 1, 0, 0])
        assert accuracy == pytest.approx(0.5)
        assert f1 == pytest.approx(2 / 3)

    def test_empty(self):
        with pytest.raises(ValueError):
            metrics([], [])

    def test_mean_std(self):
        assert mean_std([1.0, 3.0]) == (2.0, 1.0)
        assert all(np.isnan(v) for v in mean_std([]))
