import json
import os

import pytest

from src.appdata import OUTPUT_DIR_ENV
from src.experiment.manifest import read_rank_file
from src.experiment.ts_converter import format_sample
from src.main import EXIT_CONFIG_ERROR, EXIT_DATA_ERROR, EXIT_OK, main
from src.model.checkpoint import read_checkpoint
from tests.helpers import make_public_partition

TOY_TS = """# toy two-class archive
@problemName Toy
@timeStamps false
@univariate false
@dimensions 2
@equalLength true
@seriesLength 3
@classLabel true up down
@data
1,2,3:4,5,6:up
3,2,1:6,5,4:down
"""


def write_public_data(folder):
    folder.mkdir()
    partition = make_public_partition()
    with open(folder / 'toy.txt', 'w', encoding='utf-8', newline='\n') as file:
        for sample in partition.samples.values():
            file.write(format_sample(sample.given_label, sample.values) + '\n')
    return folder


def write_config(path, **settings):
    path.write_text(json.dumps(settings), encoding='utf-8')
    return path


def run_config(tmp_path, output_dir, **settings):
    options = dict(mode='public', data_dir=str(write_public_data(tmp_path / 'data')), seed=11, n_folds=5,
                   filters=4, max_epochs=3, self_supervised_epochs=1, learning_rate=0.01,
                   output_dir=str(output_dir))
    options.update(settings)
    return write_config(tmp_path / 'config.json', **options)


def snapshot(folder):
    files = {}
    for root, _, names in os.walk(folder):
        if os.path.basename(root) == 'logs':
            continue
        for name in names:
            path = os.path.join(root, name)
            with open(path, 'rb') as file:
                files[os.path.relpath(path, folder)] = file.read()
    return files


@pytest.fixture(autouse=True)
def no_output_override(monkeypatch):
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)


@pytest.fixture(scope='module')
def public_run_dir(tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp('cli_run')
    out = tmp_path / 'run'
    config = run_config(tmp_path, out)
    previous = os.environ.pop(OUTPUT_DIR_ENV, None)
    try:
        assert main(['run', str(config)]) == EXIT_OK
        first = snapshot(out)
        assert main(['run', str(config)]) == EXIT_OK
        second = snapshot(out)
    finally:
        if previous is not None:
            os.environ[OUTPUT_DIR_ENV] = previous
    return out, first, second


class TestRun:

    def test_manifest_files(self, public_run_dir):
        out, first, _ = public_run_dir
        for name in ('config.json', 'partition.txt', 'noise_report.txt', 'feature_importance.txt', 'report.txt',
                     os.path.join('stage1', 'folds.txt'), os.path.join('stage2', 'accumulated.txt'),
                     os.path.join('checkpoints', 'stage1_fold0.tnanet')):
            assert name in first
        assert os.path.isfile(out / 'logs' / 'tnanet.log')
        assert 'rank.txt' not in first

    def test_rerun_is_byte_identical(self, public_run_dir):
        _, first, second = public_run_dir
        assert sorted(first) == sorted(second)
        for name in first:
            assert first[name] == second[name], name

    def test_accumulated_counts(self, public_run_dir):
        out, _, _ = public_run_dir
        lines = (out / 'stage1' / 'accumulated.txt').read_text().splitlines()
        assert len(lines) == 27
        assert all(int(line.split()[3]) == 1 for line in lines)

    def test_report(self, public_run_dir):
        out, _, _ = public_run_dir
        report = (out / 'report.txt').read_text()
        assert 'Before CL' in report
        assert 'After CL' in report
        assert 'corrupted labels among removed' in report

    def test_rank_needs_ppg_run(self, public_run_dir):
        out, _, _ = public_run_dir
        assert main(['rank', str(out)]) == EXIT_DATA_ERROR

    def test_features(self, public_run_dir, tmp_path):
        out, _, _ = public_run_dir
        target = tmp_path / 'importance.txt'
        checkpoint = out / 'checkpoints' / 'stage2_fold0.tnanet'
        assert main(['features', str(checkpoint), '--output', str(target)]) == EXIT_OK
        lines = target.read_text().splitlines()
        assert [line.split()[0] for line in lines] == ['1', '2', '3']
        assert {line.split()[1] for line in lines} == {'channel_0', 'channel_1', 'channel_2'}
        assert read_checkpoint(checkpoint).hp.n_channels == 3

    def test_corrupted_checkpoint(self, public_run_dir, tmp_path):
        out, _, _ = public_run_dir
        data = bytearray((out / 'checkpoints' / 'stage1_fold0.tnanet').read_bytes())
        data[len(data) // 2] ^= 0xFF
        broken = tmp_path / 'broken.tnanet'
        broken.write_bytes(bytes(data))
        assert main(['features', str(broken), '--output', str(tmp_path / 'x.txt')]) == EXIT_DATA_ERROR

    def test_skip_cl(self, tmp_path):
        out = tmp_path / 'run'
        config = run_config(tmp_path, out)
        assert main(['run', str(config), '--skip-cl', '--max-epochs', '2']) == EXIT_OK
        assert not os.path.exists(out / 'stage2')
        assert not os.path.exists(out / 'noise_report.txt')
        saved = json.loads((out / 'config.json').read_text())
        assert saved['skip_cl'] is True
        assert saved['max_epochs'] == 2

    def test_output_dir_from_environment(self, tmp_path, monkeypatch):
        config = run_config(tmp_path, tmp_path / 'configured', skip_cl=True, max_epochs=1)
        monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / 'from_env'))
        assert main(['run', str(config)]) == EXIT_OK
        assert os.path.isfile(tmp_path / 'from_env' / 'report.txt')
        assert not os.path.exists(tmp_path / 'configured')


class TestConfigErrors:

    def test_missing_file(self, tmp_path):
        assert main(['run', str(tmp_path / 'nope.json')]) == EXIT_CONFIG_ERROR

    def test_missing_keys(self, tmp_path):
        config = write_config(tmp_path / 'config.json', mode='ppg')
        assert main(['run', str(config)]) == EXIT_CONFIG_ERROR

    def test_too_many_public_folds(self, tmp_path):
        config = run_config(tmp_path, tmp_path / 'run', n_folds=10)
        assert main(['run', str(config)]) == EXIT_CONFIG_ERROR

    def test_mode_mismatch_is_data_error(self, tmp_path):
        config = run_config(tmp_path, tmp_path / 'run', mode='ppg')
        assert main(['run', str(config)]) == EXIT_DATA_ERROR


class TestRank:

    def test_table(self, tmp_path, capsys):
        write_config(tmp_path / 'config.json', mode='ppg', data_dir='.', seed=1)
        (tmp_path / 'rank.txt').write_text('0 TP001 0.9 0 12\n0 TP002 0.4 5 12\n1 TP003 0.7 2 12\n')
        assert main(['rank', str(tmp_path)]) == EXIT_OK
        out = capsys.readouterr().out
        assert 'repetition 0 average rank 2.50' in out
        assert 'repetition 1 average rank 2.00' in out
        assert 'all ranks within top 200: yes' in out
        assert main(['rank', str(tmp_path), '--top', '3']) == EXIT_OK
        assert 'all ranks within top 3: no' in capsys.readouterr().out
        assert [row['rank'] for row in read_rank_file(tmp_path)] == [0, 5, 2]

    def test_missing_run(self, tmp_path):
        assert main(['rank', str(tmp_path)]) == EXIT_DATA_ERROR

    def test_malformed_rank_file(self, tmp_path):
        write_config(tmp_path / 'config.json', mode='ppg')
        (tmp_path / 'rank.txt').write_text('0 TP001 high\n')
        assert main(['rank', str(tmp_path)]) == EXIT_DATA_ERROR


class TestSynthAndPreprocess:

    def synth(self, out, *extra):
        return main(['synth', str(out), '--seed', '4', '--n', '2', '--static-s', '10', '--stimulation-s', '20',
                     *extra])

    def test_synth_is_seeded(self, tmp_path):
        assert self.synth(tmp_path / 'a') == EXIT_OK
        assert self.synth(tmp_path / 'b') == EXIT_OK
        names = sorted(n for n in os.listdir(tmp_path / 'a') if os.path.isfile(tmp_path / 'a' / n))
        assert names == ['ground_truth.txt', 'negative_4_001.ppg', 'negative_4_002.ppg']
        for name in names:
            assert (tmp_path / 'a' / name).read_bytes() == (tmp_path / 'b' / name).read_bytes()

    def test_synth_bad_bpm(self, tmp_path):
        assert self.synth(tmp_path / 'a', '--bpm', '30') == EXIT_CONFIG_ERROR

    def test_synth_cohort(self, tmp_path):
        out = tmp_path / 'cohort'
        assert main(['synth', str(out), '--seed', '1', '--cohort', '--n-tp', '1', '--n-tn', '1', '--n-un', '2',
                     '--planted', '0.5', '--static-s', '10', '--stimulation-s', '20']) == EXIT_OK
        groups = (out / 'groups.txt').read_text().splitlines()
        assert groups == ['TP001 TP', 'TN001 TN', 'UN001 UN', 'UN002 UN']

    def test_preprocess_short_recordings_fail(self, tmp_path):
        assert self.synth(tmp_path / 'raw') == EXIT_OK
        (tmp_path / 'raw' / 'broken.ppg').write_text('fs=100\n1 2 3\n')
        assert main(['preprocess', str(tmp_path / 'raw'), str(tmp_path / 'features')]) == EXIT_DATA_ERROR
        assert not [n for n in os.listdir(tmp_path / 'features') if n.endswith('.features')]

    def test_preprocess_writes_features(self, tmp_path):
        raw = tmp_path / 'raw'
        assert main(['synth', str(raw), '--seed', '2', '--static-s', '30', '--stimulation-s', '300']) == EXIT_OK
        out = tmp_path / 'features'
        assert main(['preprocess', str(raw), str(out)]) == EXIT_OK
        assert os.path.isfile(out / 'negative_2_001.features')
        assert os.path.isfile(out / 'ground_truth.txt')

    def test_preprocess_empty_folder(self, tmp_path):
        (tmp_path / 'raw').mkdir()
        assert main(['preprocess', str(tmp_path / 'raw'), str(tmp_path / 'out')]) == EXIT_DATA_ERROR


class TestConvert:

    def test_convert(self, tmp_path):
        source = tmp_path / 'Toy_TRAIN.ts'
        source.write_text(TOY_TS)
        target = tmp_path / 'toy.txt'
        assert main(['convert', str(source), str(target)]) == EXIT_OK
        assert target.read_text().splitlines() == ['1;1.0,2.0,3.0;4.0,5.0,6.0', '0;3.0,2.0,1.0;6.0,5.0,4.0']

    def test_positive_label(self, tmp_path):
        source = tmp_path / 'Toy_TRAIN.ts'
        source.write_text(TOY_TS)
        target = tmp_path / 'toy.txt'
        assert main(['convert', str(source), str(target), '--positive', 'down']) == EXIT_OK
        assert [line[0] for line in target.read_text().splitlines()] == ['0', '1']

    def test_unequal_length(self, tmp_path):
        source = tmp_path / 'bad.ts'
        source.write_text(TOY_TS.replace('1,2,3:4,5,6:up', '1,2:4,5,6:up'))
        assert main(['convert', str(source), str(tmp_path / 'out.txt')]) == EXIT_DATA_ERROR

    def test_three_classes(self, tmp_path):
        source = tmp_path / 'bad.ts'
        source.write_text(TOY_TS.replace('@classLabel true up down', '@classLabel true up down flat'))
        assert main(['convert', str(source), str(tmp_path / 'out.txt')]) == EXIT_DATA_ERROR
