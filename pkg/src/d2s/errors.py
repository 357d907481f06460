"""Exception types mapped to CLI exit codes (2/3/4)."""


class DataFormatError(Exception):
    """A container, checkpoint or raw file is structurally invalid."""


class TrainingDivergedError(Exception):
    """The total loss became non-finite during training."""
