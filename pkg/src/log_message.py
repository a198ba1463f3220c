import logging
import os
import sys
from dataclasses import dataclass
from enum import Flag, auto


@dataclass
class LogMessageSystems:
    PREPROCESS = 'Preprocess'
    PIPELINE = 'Pipeline'
    NOISE_FILTER = 'NoiseFilter'
    MODEL = 'Model'
    SYNTH = 'Synth'
    CONVERT = 'Convert'
    RANK = 'Rank'


class LogMessageTypes(Flag):
    CONSOLE = auto()
    LOG_FILE = auto()
    ALL = CONSOLE | LOG_FILE


@dataclass
class LogMessage:
    message_types: LogMessageTypes
    message_system: str
    message: str

    def message_string(self):
        return f'{self.message_system}: {self.message}'

    def display_on(self, message_type=None):
        return message_type in self.message_types


def log_message(message_types, message_system, message, stream=None):
    msg = LogMessage(message_types, message_system, message)
    if msg.display_on(LogMessageTypes.CONSOLE):
        print(msg.message, file=stream or sys.stdout)
    if msg.display_on(LogMessageTypes.LOG_FILE):
        logging.info(msg.message_string())
    return msg


LOG_FORMAT = "%(asctime)s,%(msecs)-3d %(levelname)-8s [%(filename)s:%(lineno)d] %(message)s"
LOG_DATE_FORMAT = "%Y-%m-%d:%H:%M:%S"


def setup_logging(path=None, level=logging.INFO):
    """
    Log records go to `path` (replaced on every call) and warnings also to
    stderr. Without a path only the stderr handler is installed.
    """
    handlers = []
    if path is not None:
        if os.path.isfile(path):
            os.unlink(path)
        handlers.append(logging.FileHandler(path, encoding='utf-8'))
    console = logging.StreamHandler(sys.stderr)
    console.setLevel(logging.WARNING)
    console.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    handlers.append(console)
    logging.basicConfig(
        format=LOG_FORMAT,
        datefmt=LOG_DATE_FORMAT,
        level=level,
        handlers=handlers,
        force=True
    )
    if path is not None:
        logging.debug(f"Logging to {path}")
