"""Exception types shared across the package.

Data errors (bad inputs, missing files, malformed rows) derive from
DataError; runtime failures (divergence, corrupt checkpoints) derive from
RuntimeFailure. The CLI maps these onto distinct exit codes.
"""

from __future__ import annotations


class CapriError(Exception):
    """Base class for all package errors."""

    code = "error"


class DataError(CapriError):
    code = "data_error"


class RuntimeFailure(CapriError):
    code = "runtime_failure"


# --- dataset ---------------------------------------------------------------

class MissingImage(DataError):
    code = "missing_image"

    def __init__(self, path):
        self.path = path
        super().__init__(f"referenced image does not exist: {path}")


class MalformedRow(DataError):
    code = "malformed_row"

    def __init__(self, index, reason=""):
        self.index = index
        self.reason = reason
        super().__init__(f"metadata row {index} is malformed: {reason}")


class EmptyCatalog(DataError):
    code = "empty_catalog"


class TooFewRecords(DataError):
    code = "too_few_records"


class UndecodableImage(DataError):
    code = "undecodable_image"

    def __init__(self, path, reason=""):
        self.path = path
        super().__init__(f"cannot decode image {path}: {reason}")


# --- graph -----------------------------------------------------------------

class UnknownNode(DataError):
    code = "unknown_node"

    def __init__(self, name):
        self.name = name
        super().__init__(f"node not in graph: {name!r}")


# --- model -----------------------------------------------------------------

class IndexOutOfVocab(DataError):
    code = "index_out_of_vocab"


class ShapeMismatch(DataError):
    code = "shape_mismatch"


class NonFiniteLoss(RuntimeFailure):
    """Loss became NaN/inf; the training run must abort."""

    code = "non_finite_loss"


# --- training / evaluation --------------------------------------------------

class EmptyDataset(DataError):
    code = "empty_dataset"


class ConstantTargets(DataError):
    """R^2 is undefined when every target is identical.

    MAE/RMSE are still well defined and are carried on the exception so
    callers can report them.
    """

    code = "constant_targets"

    def __init__(self, mae, rmse):
        self.mae = mae
        self.rmse = rmse
        super().__init__(
            f"all targets identical: R^2 undefined (mae={mae}, rmse={rmse})"
        )


class EnsembleMemberFailed(RuntimeFailure):
    code = "ensemble_member_failed"

    def __init__(self, seed, cause):
        self.seed = seed
        self.cause = cause
        super().__init__(f"ensemble member with seed {seed} failed: {cause}")


# --- checkpoints -------------------------------------------------------------

class FormatVersionMismatch(DataError):
    code = "format_version_mismatch"


class CorruptCheckpoint(DataError):
    code = "corrupt_checkpoint"


# --- causal engine -----------------------------------------------------------

class UnknownLevel(DataError):
    code = "unknown_level"

    def __init__(self, field, value):
        self.field = field
        self.value = value
        super().__init__(f"unknown {field} level: {value!r}")


class RecordNotFound(DataError):
    code = "record_not_found"


class MalformedScenario(DataError):
    code = "malformed_scenario"

    def __init__(self, index, reason=""):
        self.index = index
        super().__init__(f"scenario row {index} is malformed: {reason}")


# --- statistics --------------------------------------------------------------

class DegenerateMatrix(DataError):
    code = "degenerate_matrix"


class AllZeroDifferences(DataError):
    code = "all_zero_differences"
