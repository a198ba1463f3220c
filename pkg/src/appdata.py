import datetime
import os
from functools import lru_cache
from typing import Optional

OUTPUT_DIR_ENV = 'TNANET_OUTPUT_DIR'


@lru_cache()
def prepare_ext(ext: Optional[str]):
    if ext and len(ext) != 0:
        while ext.startswith('..'):
            ext = ext[1:]
        if len(ext) == 1 and ext[0] == '.':
            ext = ''
        if len(ext) != 0 and ext[0] != '.':
            ext = '.' + ext
    return ext or ''


def resolve_output_dir(configured: Optional[str]) -> str:
    """
    The environment variable wins over the configured value, it is the only
    environment override the CLI honours.
    """
    override = os.environ.get(OUTPUT_DIR_ENV)
    if override:
        return override
    return configured or 'runs'


class AppDataPaths:
    """
    File layout of one run (or preprocessing) output directory:

        <home>/                     manifest files
        <home>/logs/<name>.log      log file
        <home>/stage<s>/            per-stage manifest files
        <home>/checkpoints/         fold checkpoints
    """
    DEFAULT_EXT = '.txt'
    DEFAULT_LOG_FILE_NAME = 'tnanet'

    def __init__(self, home_folder_path, name=None, logs_folder_name='logs',
                 checkpoints_folder_name='checkpoints'):
        self.name = name if name else self.DEFAULT_LOG_FILE_NAME
        self.home_folder_path = home_folder_path
        self.logs_folder_name = logs_folder_name
        self.checkpoints_folder_name = checkpoints_folder_name
        assert self.home_folder_path

    def get_config_path(self, name=None, ext=None):
        ext = prepare_ext(ext if ext is not None else self.DEFAULT_EXT)
        name = name if name is not None else 'config'
        return os.path.join(self.home_folder_path, name + ext)

    def get_log_file_path(self, name=None, history=False):
        name = name or self.name
        if history:
            timestamp = datetime.datetime.now().strftime("%Y%m%d_%H%M%S")
            name = f"{name}_{timestamp}"
        return os.path.join(self.logs_path, name + '.log')

    def get_stage_path(self, stage: int, name=None, ext=None):
        folder = os.path.join(self.home_folder_path, f'stage{stage}')
        if name is None:
            return folder
        return os.path.join(folder, name + prepare_ext(ext if ext is not None else self.DEFAULT_EXT))

    def get_checkpoint_path(self, stage: int, fold: int):
        return os.path.join(self.checkpoints_path, f'stage{stage}_fold{fold}.tnanet')

    def setup(self, stages=()):
        for path in [self.home_folder_path, self.logs_path, self.checkpoints_path] + \
                [self.get_stage_path(s) for s in stages]:
            if not os.path.exists(path):
                os.makedirs(path)

    @property
    def logs_path(self):
        if self.logs_folder_name:
            return os.path.join(self.home_folder_path, self.logs_folder_name)
        return self.home_folder_path

    @property
    def checkpoints_path(self):
        return os.path.join(self.home_folder_path, self.checkpoints_folder_name)

    @property
    def log_file_path(self):
        return self.get_log_file_path()
