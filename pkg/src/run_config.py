import logging
import os
from dataclasses import dataclass

from src.appdata import resolve_output_dir
from src.custom_exception import ConfigError
from src.settings_base import SettingsBase


@dataclass
class RunModes:
    PPG = 'ppg'
    PUBLIC = 'public'


@dataclass
class NoiseModes:
    FLIP = 'flip'
    SHUFFLE = 'shuffle'


@dataclass
class DbnActivations:
    LINEAR = 'linear'
    SIGMOID = 'sigmoid'


@dataclass
class AblationConditions:
    ENTIRE_TRAINING_SET = 'With Entire Training Set'
    UN_SAMPLES = 'With UN Samples'
    WITHOUT_PHASE = 'Without the Phase'
    BEFORE_CL = 'Before CL'
    AFTER_CL = 'After CL'


REQUIRED_KEYS = ['mode', 'data_dir', 'seed']


class RunConfig(SettingsBase):
    version = "1"

    def __init__(self, path):
        SettingsBase.__init__(self, path, {
            "output_dir": "runs",
            "n_folds": 5,
            "noise_ratio": 0.3,
            "noise_mode": NoiseModes.FLIP,
            "filters": 16,
            "learning_rate": 0.001,
            "max_epochs": 100,
            "patience": 10,
            "min_delta": 1e-5,
            "self_supervised_epochs": 3,
            "hidden1": None,
            "hidden2": None,
            "dbn_activation": DbnActivations.LINEAR,
            "disable_self_supervised": False,
            "self_supervised_un_only": False,
            "skip_cl": False,
            "heldout_tp": 3,
            "test_tp": 6,
            "test_tn": 6,
            "train_un": 6,
            "rank_repetitions": 1,
            "rank_top": 200,
            "normalize_public": True,
            "jobs": 1,
            "keep_log_history": False
        })

    def load(self):
        super().load()
        filled = self.apply_defaults()
        if filled:
            logging.debug(f"{self.__class__.__name__}: defaults used for {', '.join(filled)}")

    def apply_overrides(self, overrides):
        """Flags given on the command line win over the file, None means not given."""
        for key, value in overrides.items():
            if value is not None:
                logging.debug(f"{self.__class__.__name__}: override {key}={value}")
                setattr(self, key, value)

    def apply_environment(self):
        self.output_dir = resolve_output_dir(getattr(self, 'output_dir', None))

    @property
    def self_supervision_condition(self):
        if self.disable_self_supervised:
            return AblationConditions.WITHOUT_PHASE
        if self.self_supervised_un_only:
            return AblationConditions.UN_SAMPLES
        return AblationConditions.ENTIRE_TRAINING_SET

    @property
    def noise_filter_condition(self):
        return AblationConditions.BEFORE_CL if self.skip_cl else AblationConditions.AFTER_CL

    def validate(self):
        problems = []
        for key in REQUIRED_KEYS:
            if getattr(self, key, None) is None:
                problems.append(f"'{key}' is required")

        def check_int(key, minimum, maximum=None):
            value = getattr(self, key, None)
            if isinstance(value, bool) or not isinstance(value, int):
                problems.append(f"'{key}' must be an integer, got {value!r}")
            elif value < minimum or (maximum is not None and value > maximum):
                limit = f"in [{minimum}, {maximum}]" if maximum is not None else f">= {minimum}"
                problems.append(f"'{key}' must be {limit}, got {value}")

        def check_number(key, minimum, maximum=None, exclusive_min=False):
            value = getattr(self, key, None)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                problems.append(f"'{key}' must be a number, got {value!r}")
                return
            too_small = value <= minimum if exclusive_min else value < minimum
            if too_small or (maximum is not None and value > maximum):
                problems.append(f"'{key}' is out of range: {value}")

        def check_choice(key, choices):
            value = getattr(self, key, None)
            if value not in choices:
                problems.append(f"'{key}' must be one of {', '.join(choices)}, got {value!r}")

        def check_flag(key):
            if not isinstance(getattr(self, key, None), bool):
                problems.append(f"'{key}' must be true or false")

        mode = getattr(self, 'mode', None)
        if mode is not None:
            check_choice('mode', [RunModes.PPG, RunModes.PUBLIC])
        if getattr(self, 'seed', None) is not None:
            check_int('seed', 0)
        data_dir = getattr(self, 'data_dir', None)
        if data_dir is not None and not os.path.isdir(str(data_dir)):
            problems.append(f"'data_dir' does not exist: {data_dir}")
        if mode == RunModes.PUBLIC:
            check_int('n_folds', 1, 9)
        else:
            check_int('n_folds', 1)
        check_number('noise_ratio', 0.0, 1.0)
        check_choice('noise_mode', [NoiseModes.FLIP, NoiseModes.SHUFFLE])
        check_int('filters', 1)
        check_number('learning_rate', 0.0, exclusive_min=True)
        check_int('max_epochs', 1)
        check_int('patience', 1)
        check_number('min_delta', 0.0)
        check_int('self_supervised_epochs', 0)
        for key in ['hidden1', 'hidden2']:
            if getattr(self, key) is not None:
                check_int(key, 1)
        if isinstance(self.hidden2, int) and not isinstance(self.hidden2, bool) and 1 <= self.hidden2 < 4:
            problems.append(f"'hidden2' must be >= 4 so the first pooling keeps a column, got {self.hidden2}")
        check_choice('dbn_activation', [DbnActivations.LINEAR, DbnActivations.SIGMOID])
        for key in ['disable_self_supervised', 'self_supervised_un_only', 'skip_cl',
                    'normalize_public', 'keep_log_history']:
            check_flag(key)
        if self.disable_self_supervised is True and self.self_supervised_un_only is True:
            problems.append("'disable_self_supervised' and 'self_supervised_un_only' cannot both be set")
        if self.self_supervised_un_only is True and mode == RunModes.PUBLIC:
            problems.append("'self_supervised_un_only' needs UN samples, only available in ppg mode")
        for key in ['heldout_tp', 'test_tp', 'test_tn', 'train_un']:
            check_int(key, 0)
        check_int('rank_repetitions', 1)
        check_int('rank_top', 1)
        check_int('jobs', 1)
        if problems:
            raise ConfigError(problems)
        logging.debug(f"{self.__class__.__name__}: valid {self.to_json(compact=True)}")
        return self
