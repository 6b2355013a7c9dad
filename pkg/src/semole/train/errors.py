class TrainError(Exception):
    pass


class DatasetTooSmall(TrainError):
    pass


class ConfigError(TrainError, ValueError):
    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}" if line else reason)


class CheckpointError(TrainError):
    pass


class CorruptCheckpoint(CheckpointError):
    pass


class VersionMismatch(CheckpointError):
    pass
