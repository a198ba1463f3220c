import logging
import os
import shutil
from typing import Optional

from src.appdata import AppDataPaths
from src.custom_exception import DatasetFormatError, TnanetDataError
from src.experiment.dataset import GROUND_TRUTH_FILE, GROUPS_FILE, load_ppg_dataset, load_public_dataset
from src.experiment.manifest import RunManifest, read_rank_file, read_run_mode, render_rank_table
from src.experiment.pipeline import PipelineSettings, two_stage_pipeline
from src.experiment.ts_converter import convert_ts
from src.log_message import LogMessageSystems, LogMessageTypes, log_message, setup_logging
from src.model.checkpoint import read_checkpoint
from src.model.hyper_params import HyperParams
from src.model.tnanet import feature_importance
from src.ppg.feature_matrix import FEATURE_EXT, build_feature_matrix, write_feature_file
from src.ppg.recording import RECORDING_EXT, list_recordings, read_recording, write_recording
from src.ppg.synthetic import generate_cohort, generate_synthetic_ppg, profile_for
from src.run_config import RunConfig, RunModes

TRUTH_HEADER = "# subject_id label planted mean_ibi_s sdnn_ms heart_rate"


def cmd_preprocess(raw_dir, out_dir, level=logging.INFO):
    """One feature file per recording. Returns 1 when any recording failed, 0 otherwise."""
    paths = AppDataPaths(out_dir)
    paths.setup()
    setup_logging(paths.get_log_file_path('preprocess'), level)
    recordings = list_recordings(raw_dir)
    if not recordings:
        raise DatasetFormatError(f"{raw_dir}: no {RECORDING_EXT} recordings")
    failed = 0
    for path in recordings:
        try:
            matrix = build_feature_matrix(read_recording(path))
        except TnanetDataError as e:
            failed += 1
            log_message(LogMessageTypes.ALL, LogMessageSystems.PREPROCESS, f"{os.path.basename(path)}: failed: {e}")
            continue
        write_feature_file(os.path.join(out_dir, matrix.subject_id + FEATURE_EXT), matrix)
        filled = ','.join(str(t) for t in matrix.filled_windows) or 'none'
        log_message(LogMessageTypes.ALL, LogMessageSystems.PREPROCESS,
                    f"{matrix.subject_id}: {matrix.shape[1]} windows, filled windows: {filled}")
    for name in (GROUPS_FILE, GROUND_TRUTH_FILE):
        if os.path.isfile(os.path.join(raw_dir, name)):
            shutil.copyfile(os.path.join(raw_dir, name), os.path.join(out_dir, name))
    log_message(LogMessageTypes.ALL, LogMessageSystems.PREPROCESS,
                f"{len(recordings) - failed} of {len(recordings)} recordings preprocessed")
    return 1 if failed else 0


def load_run_config(config_path, overrides=None) -> RunConfig:
    config = RunConfig(config_path)
    config.apply_overrides(overrides or {})
    config.apply_environment()
    return config.validate()


def cmd_run(config_path, overrides=None, level=logging.INFO) -> str:
    config = load_run_config(config_path, overrides)
    stages = (1,) if config.skip_cl else (1, 2)
    paths = AppDataPaths(config.output_dir)
    paths.setup(stages)
    setup_logging(paths.get_log_file_path(history=config.keep_log_history), level)
    logging.info(f"cmd_run: configuration {config.to_json(compact=True)}")
    if config.mode == RunModes.PPG:
        partition = load_ppg_dataset(config.data_dir)
    else:
        partition = load_public_dataset(config.data_dir, config.normalize_public)
    n_channels, n_windows = partition.shape
    hp = HyperParams.create(n_channels, n_windows, config.hidden1, config.hidden2, filters=config.filters,
                            lr=config.learning_rate, max_epochs=config.max_epochs, patience=config.patience,
                            min_delta=config.min_delta, self_supervised_epochs=config.self_supervised_epochs,
                            dbn_activation=config.dbn_activation, feature_names=list(partition.feature_names))
    log_message(LogMessageTypes.ALL, LogMessageSystems.PIPELINE,
                f"{len(partition.samples)} samples of shape ({n_channels}, {n_windows}), hidden sizes "
                f"{hp.hidden1}/{hp.hidden2}, {config.self_supervision_condition}, {config.noise_filter_condition}")
    manifest = RunManifest(paths)
    result = two_stage_pipeline(partition, PipelineSettings.from_config(config, hp), manifest.write_checkpoint)
    report = manifest.write(result, config, hp.channel_names())
    log_message(LogMessageTypes.CONSOLE, LogMessageSystems.PIPELINE, report.rstrip('\n'))
    return report


def cmd_rank(run_dir, top: Optional[int] = None):
    setup_logging()
    rows = read_rank_file(run_dir)
    if top is None:
        config = RunConfig(read_run_mode(run_dir)[1])
        top = config.rank_top
    lines = render_rank_table(rows, top)
    log_message(LogMessageTypes.CONSOLE, LogMessageSystems.RANK, '\n'.join(lines))
    return lines


def cmd_features(checkpoint_path, output_path=None):
    setup_logging()
    model = read_checkpoint(checkpoint_path)
    importance = feature_importance(model)
    lines = ["rank feature"] + [f"{rank} {name}" for rank, (name, _) in enumerate(importance, 1)]
    output_path = output_path or os.path.splitext(checkpoint_path)[0] + '_importance.txt'
    with open(output_path, 'w', encoding='utf-8', newline='\n') as file:
        for rank, (name, score) in enumerate(importance, 1):
            file.write(f"{rank} {name} {'%.17g' % score}\n")
    log_message(LogMessageTypes.CONSOLE, LogMessageSystems.MODEL, '\n'.join(lines))
    return importance


def write_truth(out_dir, synthetics):
    with open(os.path.join(out_dir, GROUND_TRUTH_FILE), 'w', encoding='utf-8', newline='\n') as file:
        file.write(TRUTH_HEADER + '\n')
        for synthetic in synthetics:
            file.write(synthetic.truth.to_line() + '\n')


def cmd_synth(out_dir, n=1, label='negative', seed=0, bpm=None, jitter=None, fs=100.0, static_s=180.0,
              stimulation_s=300.0, cohort=False, n_tp=30, n_tn=21, n_un=200, planted_fraction=0.1):
    """
    Raw recordings plus a ground-truth sidecar. With `cohort` a TP/TN/UN cohort
    and its groups file are written instead of `n` recordings of one class.
    """
    profile = profile_for(label, bpm_mean=bpm, ibi_jitter_s=jitter)
    paths = AppDataPaths(out_dir)
    paths.setup()
    setup_logging(paths.get_log_file_path('synth'))
    if cohort:
        members = generate_cohort(n_tp, n_tn, n_un, planted_fraction, seed, static_s, stimulation_s, fs, bpm)
        synthetics = [member.synthetic for member in members]
        with open(os.path.join(out_dir, GROUPS_FILE), 'w', encoding='utf-8', newline='\n') as file:
            for member in members:
                file.write(f"{member.synthetic.truth.subject_id} {member.group}\n")
    else:
        synthetics = [generate_synthetic_ppg(profile, static_s, stimulation_s, fs, seed=[seed, k],
                                             subject_id=f"{profile.label}_{seed}_{k + 1:03d}")
                      for k in range(n)]
    for synthetic in synthetics:
        write_recording(os.path.join(out_dir, synthetic.truth.subject_id + RECORDING_EXT), synthetic.recording)
    write_truth(out_dir, synthetics)
    log_message(LogMessageTypes.ALL, LogMessageSystems.SYNTH,
                '\n'.join([TRUTH_HEADER] + [s.truth.to_line() for s in synthetics]))
    return synthetics


def cmd_convert(ts_path, output_path, positive=None):
    setup_logging()
    count, mapping = convert_ts(ts_path, output_path, positive)
    log_message(LogMessageTypes.ALL, LogMessageSystems.CONVERT,
                f"{count} samples written to {output_path}, labels "
                + ', '.join(f"{label} -> {value}" for label, value in mapping.items()))
    return count
