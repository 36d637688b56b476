"""Exception types shared across the pipeline."""


class DataError(ValueError):
    """Manifest, image, or artifact content failed to load or validate."""


class DegenerateSplitError(DataError):
    """A class has too few records to populate every requested split."""


class TrainingDataError(ValueError):
    """Training corpus is missing a class or is otherwise unusable."""


class AdapterError(RuntimeError):
    """Base encoder adapter is unavailable or lacks a required capability."""


class NumericError(ArithmeticError):
    """A computation produced non-finite values or violated a numeric contract."""


class DegenerateModelError(ValueError):
    """Model weights are degenerate for the requested operation (e.g. zero head)."""


class SnapshotError(RuntimeError):
    """Snapshot bundle is missing, partial, or inconsistent."""
