import json
import logging
import os

from src.custom_exception import ConfigError


class SettingsBase:

    def __init__(self, path: str, settings_json: dict):
        self.path = path
        self.settings_json = settings_json
        self.load()

    def load(self):
        logging.debug(f"Loading settings from {self.path}")
        if not os.path.isfile(self.path):
            raise ConfigError(f"Could not open settings file: {self.path}")
        settings = self.read_json_file()
        if not isinstance(settings, dict):
            raise ConfigError(f"Settings file {self.path} must hold a flat JSON object")
        logging.debug(f"Setting in {self.path}: {settings}")
        # Create dynamic attributes
        for key in settings:
            setattr(self, key, settings[key])

    def apply_defaults(self):
        """Fill in keys missing from the file, returns the names filled."""
        filled = []
        for key, value in self.settings_json.items():
            if not hasattr(self, key):
                setattr(self, key, value)
                filled.append(key)
        return filled

    def as_dict(self):
        exclude = ['path', 'settings_json']
        return dict((key, value) for key, value in sorted(self.__dict__.items()) if key not in exclude)

    def to_json(self, compact=False):
        if compact:
            return json.dumps(self.as_dict(), separators=(", ", ": "), sort_keys=True)
        return json.dumps(self.as_dict(), indent=4, sort_keys=True)

    def save(self, path=None):
        with open(path or self.path, "w", encoding='utf-8', newline='\n') as file:
            file.write(self.to_json() + '\n')

    def read_json_file(self):
        try:
            with open(self.path, 'r', encoding='utf-8') as file:
                return json.load(file)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Settings file {self.path} is not valid JSON: {format(e)}")
