"""
Run manifest: plain-text files under the run directory, rows in a stable
order and floats written with %.17g so that two runs with the same
configuration and seed compare byte for byte.
"""
import json
import logging
import os
from typing import List

from src.appdata import AppDataPaths
from src.custom_exception import DatasetFormatError, ModeMismatchError
from src.experiment.cross_validation import FoldOutcome, rank_summary
from src.experiment.pipeline import PipelineResult
from src.noise.confidence_learning import write_noise_report
from src.run_config import AblationConditions, RunModes

CONFIG_FILE = 'config.json'
PARTITION_FILE = 'partition.txt'
FOLDS_NAME = 'folds'
FOLD_PREDICTIONS_NAME = 'fold_predictions'
ACCUMULATED_NAME = 'accumulated'
METRICS_NAME = 'metrics'
NOISE_REPORT_FILE = 'noise_report.txt'
RANK_FILE = 'rank.txt'
FEATURE_IMPORTANCE_FILE = 'feature_importance.txt'
REPORT_FILE = 'report.txt'


def fmt(value):
    return '%.17g' % value


def write_lines(path, lines):
    with open(path, 'w', encoding='utf-8', newline='\n') as file:
        for line in lines:
            file.write(line + '\n')


class RunManifest:

    def __init__(self, paths: AppDataPaths):
        self.paths = paths

    def __path(self, name):
        return os.path.join(self.paths.home_folder_path, name)

    def write_config(self, config):
        config.save(self.paths.get_config_path(*os.path.splitext(CONFIG_FILE)))

    def write_checkpoint(self, outcome: FoldOutcome):
        if outcome.checkpoint:
            path = self.paths.get_checkpoint_path(outcome.stage, outcome.plan.fold_index)
            with open(path, 'wb') as file:
                file.write(outcome.checkpoint)
            logging.debug(f"{self.__class__.__name__}: wrote {path}")

    def write_partition(self, result: PipelineResult):
        lines = []
        for sample_id, sample in result.partition.samples.items():
            line = f"{sample_id} {sample.group} {sample.given_label}"
            if sample.true_label is not None:
                line += f" {sample.true_label}"
            lines.append(line)
        write_lines(self.__path(PARTITION_FILE), lines)

    def write_stage(self, run):
        stage = run.stage
        lines = []
        for plan in run.folds:
            lines.append(f"fold {plan.fold_index} evaluation {int(plan.evaluation)}")
            lines.append('train ' + ' '.join(f"{i}:{label}" for i, label in plan.train_labels.items()))
            lines.append('test ' + ' '.join(plan.test_ids))
            lines.append('heldout ' + ' '.join(plan.heldout_tp_ids))
        write_lines(self.paths.get_stage_path(stage, FOLDS_NAME), lines)
        write_lines(self.paths.get_stage_path(stage, FOLD_PREDICTIONS_NAME),
                    [f"{fold} {sample_id} {fmt(p0)} {fmt(p1)}" for fold, sample_id, p0, p1 in run.cv.fold_log])
        accumulated = []
        for sample_id in sorted(run.cv.counts):
            probs = run.cv.average(sample_id)
            accumulated.append(f"{sample_id} {fmt(probs.p0)} {fmt(probs.p1)} {run.cv.counts[sample_id]}")
        write_lines(self.paths.get_stage_path(stage, ACCUMULATED_NAME), accumulated)
        write_lines(self.paths.get_stage_path(stage, METRICS_NAME),
                    [f"{m.fold_index} {int(m.evaluation)} {fmt(m.accuracy)} {fmt(m.f1)} {m.epochs} "
                     f"{fmt(m.final_loss)}" for m in run.cv.fold_metrics])

    def write_rank(self, rows):
        write_lines(self.__path(RANK_FILE),
                    [f"{row['repetition']} {row['sample_id']} {fmt(row['p1'])} {row['rank']} {row['pool_size']}"
                     for row in rows])

    def write_importance(self, importance):
        write_lines(self.__path(FEATURE_IMPORTANCE_FILE),
                    [f"{rank} {name} {fmt(score)}" for rank, (name, score) in enumerate(importance, 1)])

    def write(self, result: PipelineResult, config, feature_names) -> str:
        """Every manifest file of a finished pipeline, returns the rendered report."""
        self.write_config(config)
        self.write_partition(result)
        for run in result.stages:
            self.write_stage(run)
        if result.noise is not None:
            write_noise_report(self.__path(NOISE_REPORT_FILE), result.noise.result, result.noise.joint,
                               result.noise.thresholds)
        if result.mode == RunModes.PPG:
            self.write_rank(result.rank_rows)
        importance = result.final_stage.cv.mean_importance(feature_names)
        self.write_importance(importance)
        report = render_report(result, config, importance)
        with open(self.__path(REPORT_FILE), 'w', encoding='utf-8', newline='\n') as file:
            file.write(report)
        return report


def stage_condition(stage):
    return AblationConditions.AFTER_CL if stage == 2 else AblationConditions.BEFORE_CL


def render_rank_table(rows, top) -> List[str]:
    summary = rank_summary(rows, top)
    lines = ["repetition sample p1 rank pool"]
    for row in rows:
        lines.append(f"{row['repetition']:>10} {row['sample_id']} {row['p1']:.4f} {row['rank']} {row['pool_size']}")
    for repetition, average in summary['averages'].items():
        lines.append(f"repetition {repetition} average rank {average:.2f}")
    lines.append(f"overall average rank {summary['overall']:.2f}")
    lines.append(f"all ranks within top {top}: {'yes' if summary['all_within'] else 'no'}")
    return lines


def render_noise_summary(result: PipelineResult) -> List[str]:
    noise = result.noise
    Q = noise.joint.Q
    removed = noise.result.removed_ids
    lines = [f"thresholds t0 {noise.thresholds.t0:.4f} t1 {noise.thresholds.t1:.4f}",
             f"Q [[{Q[0, 0]:.4f}, {Q[0, 1]:.4f}], [{Q[1, 0]:.4f}, {Q[1, 1]:.4f}]]",
             f"removed {noise.result.n_noise} of {noise.result.pool_size} (requested {noise.result.requested})"]
    if result.mode == RunModes.PUBLIC:
        hits = len(set(removed) & set(result.injected_ids))
        lines.append(f"corrupted labels among removed: {hits} of {len(removed)}, "
                     f"{len(result.injected_ids)} corrupted in total")
    else:
        planted = [i for i in result.partition.un_ids if result.partition.true_label(i) == 1]
        if planted:
            hits = len(set(removed) & set(planted))
            lines.append(f"planted positives among removed: {hits} of {len(removed)}, {len(planted)} planted")
    return lines


def render_report(result: PipelineResult, config, importance) -> str:
    lines = ["TNANet run report",
             f"mode {config.mode} seed {config.seed} folds {config.n_folds}",
             f"self-supervision: {config.self_supervision_condition}",
             f"noise filter: {config.noise_filter_condition}",
             "",
             "stage condition accuracy f1"]
    for run in result.stages:
        (accuracy, accuracy_std), (f1, f1_std) = run.cv.summary()
        lines.append(f"{run.stage} {stage_condition(run.stage)} {accuracy:.4f} +- {accuracy_std:.4f} "
                     f"{f1:.4f} +- {f1_std:.4f}")
    if result.noise is not None:
        lines += ["", "noise filter"] + render_noise_summary(result)
    if result.mode == RunModes.PPG and result.rank_rows:
        lines += ["", "held-out TP ranks"] + render_rank_table(result.rank_rows, result.rank_top)
    lines += ["", "rank feature score"]
    lines += [f"{rank} {name} {score:.6f}" for rank, (name, score) in enumerate(importance, 1)]
    return '\n'.join(lines) + '\n'


def read_run_mode(run_dir):
    path = os.path.join(run_dir, CONFIG_FILE)
    if not os.path.isfile(path):
        raise DatasetFormatError(f"{run_dir}: missing {CONFIG_FILE}, not a run directory")
    try:
        with open(path, 'r', encoding='utf-8') as file:
            return json.load(file).get('mode'), path
    except (json.JSONDecodeError, AttributeError) as e:
        raise DatasetFormatError(f"{path}: {format(e)}")


def read_rank_file(run_dir):
    mode, _ = read_run_mode(run_dir)
    if mode != RunModes.PPG:
        raise ModeMismatchError(f"mode mismatch: {run_dir} is a {mode} run, ranking needs a ppg run")
    path = os.path.join(run_dir, RANK_FILE)
    if not os.path.isfile(path):
        raise DatasetFormatError(f"{run_dir}: missing {RANK_FILE}")
    rows = []
    with open(path, 'r', encoding='utf-8') as file:
        for number, line in enumerate(file, 1):
            parts = line.split()
            if not parts:
                continue
            try:
                rows.append(dict(repetition=int(parts[0]), sample_id=parts[1], p1=float(parts[2]),
                                 rank=int(parts[3]), pool_size=int(parts[4])))
            except (IndexError, ValueError):
                raise DatasetFormatError(f"{path}:{number}: expected 'repetition id p1 rank pool_size'")
    return rows