"""Exception hierarchy shared by all modules.

Every error carries a stable ``code`` string; the CLI maps codes to exit
statuses and prints them as ``code: message``.
"""


class CloudTunerError(Exception):
    """Base class for all library errors."""

    code = "error"
    exit_status = 1


class ParseError(CloudTunerError):
    code = "parse_error"
    exit_status = 3


class IncompleteGrid(CloudTunerError):
    code = "incomplete_grid"
    exit_status = 4

    def __init__(self, missing):
        self.missing = list(missing)
        shown = ", ".join(f"{w}/{c}" for w, c in self.missing[:5])
        more = "" if len(self.missing) <= 5 else f" (+{len(self.missing) - 5} more)"
        super().__init__(f"database is missing {len(self.missing)} (workload, config) cells: {shown}{more}")


class DimensionMismatch(CloudTunerError):
    code = "dimension_mismatch"
    exit_status = 5


class UnknownConfig(CloudTunerError):
    code = "unknown_config"
    exit_status = 6


class UnknownWorkload(CloudTunerError):
    code = "unknown_workload"
    exit_status = 6


class MissingRecord(CloudTunerError):
    code = "missing_record"
    exit_status = 6


class StartOutsideSpace(CloudTunerError):
    code = "start_outside_space"
    exit_status = 6


class EmptySamples(CloudTunerError):
    code = "empty_samples"
    exit_status = 7


class InvalidRatio(CloudTunerError):
    code = "invalid_ratio"
    exit_status = 7


class EmptyTrainingSet(CloudTunerError):
    code = "empty_training_set"
    exit_status = 7


class InvalidValues(CloudTunerError):
    code = "invalid_values"
    exit_status = 7


class EmptyList(CloudTunerError):
    code = "empty_list"
    exit_status = 7


class TraceTooShort(CloudTunerError):
    code = "trace_too_short"
    exit_status = 7


class KTooLarge(CloudTunerError):
    code = "k_too_large"
    exit_status = 8


class TooFewWorkloads(CloudTunerError):
    code = "too_few_workloads"
    exit_status = 8


class ModelFormatError(CloudTunerError):
    code = "model_format_error"
    exit_status = 9


class IoError(CloudTunerError):
    code = "io_error"
    exit_status = 10


#: code -> exception class, used by the CLI to translate service error payloads.
ERRORS_BY_CODE = {
    cls.code: cls
    for cls in [
        CloudTunerError,
        ParseError,
        IncompleteGrid,
        DimensionMismatch,
        UnknownConfig,
        UnknownWorkload,
        MissingRecord,
        StartOutsideSpace,
        EmptySamples,
        InvalidRatio,
        EmptyTrainingSet,
        InvalidValues,
        EmptyList,
        TraceTooShort,
        KTooLarge,
        TooFewWorkloads,
        ModelFormatError,
        IoError,
    ]
}
