class TnanetDataError(Exception):
    pass


class ConfigError(Exception):

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__('Invalid configuration:\n' + '\n'.join(f'  - {p}' for p in self.problems))


class DimensionError(TnanetDataError):
    pass


class NonFiniteError(TnanetDataError):
    pass


class GradientCheckError(TnanetDataError):

    def __init__(self, parameter, relative_error, tolerance):
        self.parameter = parameter
        self.relative_error = relative_error
        self.tolerance = tolerance
        super().__init__(f"Gradient check failed for '{parameter}': "
                         f"relative error {relative_error:.3e} > {tolerance:.1e}")


class SignalTooShortError(TnanetDataError):
    pass


class InsufficientWindowsError(TnanetDataError):

    def __init__(self, available, required):
        self.available = available
        self.required = required
        super().__init__(f'insufficient windows: {available} available, {required} required')


class BeatDetectionError(TnanetDataError):
    pass


class FeatureMatrixError(TnanetDataError):
    pass


class EmptyTrainingSetError(TnanetDataError):
    pass


class TrainingDivergedError(TnanetDataError):
    pass


class CheckpointError(TnanetDataError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointChecksumError(CheckpointError):
    pass


class CheckpointShapeError(CheckpointError):
    pass


class ThresholdError(TnanetDataError):
    pass


class FoldQuotaError(TnanetDataError):
    pass


class AccumulationError(TnanetDataError):
    pass


class DatasetFormatError(TnanetDataError):
    pass


class ModeMismatchError(TnanetDataError):
    pass
