import argparse
import logging

from src.commands import cmd_convert, cmd_features, cmd_preprocess, cmd_rank, cmd_run, cmd_synth
from src.custom_exception import ConfigError, TnanetDataError
from src.log_message import setup_logging
from src.ppg.synthetic import NEGATIVE, POSITIVE
from src.run_config import DbnActivations, NoiseModes

EXIT_OK = 0
EXIT_DATA_ERROR = 1
EXIT_CONFIG_ERROR = 2


def build_parser():
    parser = argparse.ArgumentParser(prog='TNANet', description='TNANet noisy-label biosignal classifier')
    parser.add_argument('--verbose', action='store_true', help='debug level log file')
    commands = parser.add_subparsers(dest='command', required=True)

    preprocess = commands.add_parser('preprocess', help='raw PPG recordings to feature files')
    preprocess.add_argument('raw_dir')
    preprocess.add_argument('out_dir')

    run = commands.add_parser('run', help='two-stage training from a JSON config')
    run.add_argument('config')
    run.add_argument('--mode', choices=['ppg', 'public'])
    run.add_argument('--data-dir', dest='data_dir')
    run.add_argument('--output-dir', dest='output_dir')
    run.add_argument('--seed', type=int)
    run.add_argument('--n-folds', dest='n_folds', type=int)
    run.add_argument('--noise-ratio', dest='noise_ratio', type=float)
    run.add_argument('--noise-mode', dest='noise_mode', choices=[NoiseModes.FLIP, NoiseModes.SHUFFLE])
    run.add_argument('--max-epochs', dest='max_epochs', type=int)
    run.add_argument('--hidden1', type=int)
    run.add_argument('--hidden2', type=int)
    run.add_argument('--filters', type=int)
    run.add_argument('--dbn-activation', dest='dbn_activation',
                     choices=[DbnActivations.LINEAR, DbnActivations.SIGMOID])
    run.add_argument('--disable-self-supervised', dest='disable_self_supervised', action='store_true',
                     default=None)
    run.add_argument('--self-supervised-un-only', dest='self_supervised_un_only', action='store_true',
                     default=None)
    run.add_argument('--skip-cl', dest='skip_cl', action='store_true', default=None)
    run.add_argument('--rank-repetitions', dest='rank_repetitions', type=int)
    run.add_argument('--jobs', type=int)

    rank = commands.add_parser('rank', help='held-out TP ranks of a finished ppg run')
    rank.add_argument('run_dir')
    rank.add_argument('--top', type=int)

    features = commands.add_parser('features', help='feature importance of a checkpoint')
    features.add_argument('checkpoint')
    features.add_argument('--output')

    synth = commands.add_parser('synth', help='synthetic PPG recordings')
    synth.add_argument('out_dir')
    synth.add_argument('--n', type=int, default=1)
    synth.add_argument('--class', dest='label', choices=[POSITIVE, NEGATIVE], default=NEGATIVE)
    synth.add_argument('--seed', type=int, required=True)
    synth.add_argument('--bpm', type=float)
    synth.add_argument('--jitter', type=float, help='IBI jitter in seconds')
    synth.add_argument('--fs', type=float, default=100.0)
    synth.add_argument('--static-s', dest='static_s', type=float, default=180.0)
    synth.add_argument('--stimulation-s', dest='stimulation_s', type=float, default=300.0)
    synth.add_argument('--cohort', action='store_true')
    synth.add_argument('--n-tp', dest='n_tp', type=int, default=30)
    synth.add_argument('--n-tn', dest='n_tn', type=int, default=21)
    synth.add_argument('--n-un', dest='n_un', type=int, default=200)
    synth.add_argument('--planted', type=float, default=0.1, help='planted positive fraction of UN')

    convert = commands.add_parser('convert', help='UEA .ts archive file to the public-mode format')
    convert.add_argument('ts_file')
    convert.add_argument('output')
    convert.add_argument('--positive', help='class label mapped to 1')
    return parser


RUN_OVERRIDES = ['mode', 'data_dir', 'output_dir', 'seed', 'n_folds', 'noise_ratio', 'noise_mode', 'max_epochs',
                 'hidden1', 'hidden2', 'filters', 'dbn_activation', 'disable_self_supervised',
                 'self_supervised_un_only', 'skip_cl', 'rank_repetitions', 'jobs']


def dispatch(args):
    level = logging.DEBUG if args.verbose else logging.INFO
    if args.command == 'preprocess':
        return cmd_preprocess(args.raw_dir, args.out_dir, level)
    if args.command == 'run':
        cmd_run(args.config, {key: getattr(args, key) for key in RUN_OVERRIDES}, level)
    elif args.command == 'rank':
        cmd_rank(args.run_dir, args.top)
    elif args.command == 'features':
        cmd_features(args.checkpoint, args.output)
    elif args.command == 'synth':
        cmd_synth(args.out_dir, args.n, args.label, args.seed, args.bpm, args.jitter, args.fs, args.static_s,
                  args.stimulation_s, args.cohort, args.n_tp, args.n_tn, args.n_un, args.planted)
    elif args.command == 'convert':
        cmd_convert(args.ts_file, args.output, args.positive)
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    setup_logging()
    try:
        code = dispatch(args)
    except ConfigError as e:
        logging.error(format(e))
        code = EXIT_CONFIG_ERROR
    except TnanetDataError as e:
        logging.error(f"{e.__class__.__name__}: {format(e)}")
        code = EXIT_DATA_ERROR
    except OSError as e:
        logging.error(format(e))
        code = EXIT_DATA_ERROR
    return code