"""Exception hierarchy shared by every module.

Each error carries the module it came from and the process exit code the
CLI maps it to (1 config, 2 data, 3 remote/backend).
"""


class SmmpipeError(Exception):
    module = "smmpipe"
    exit_code = 3

    def __str__(self):
        return f"[{self.module}] {super().__str__()}"


# corpus ---------------------------------------------------------------------

class DataError(SmmpipeError):
    module = "corpus"
    exit_code = 2


class MalformedRow(DataError):
    def __init__(self, row, message):
        self.row = row
        super().__init__(f"row {row}: {message}")


class DuplicateId(DataError):
    def __init__(self, row, sample_id):
        self.row = row
        self.sample_id = sample_id
        super().__init__(f"row {row}: duplicate id {sample_id!r}")


class LabelOutOfSpace(DataError):
    def __init__(self, row, label, labels):
        self.row = row
        self.label = label
        super().__init__(f"row {row}: label {label} not in label space {list(labels)}")


class UnlabeledSample(DataError):
    def __init__(self, sample_id):
        self.sample_id = sample_id
        super().__init__(f"sample {sample_id!r} has no gold label")


# backends -------------------------------------------------------------------

class BackendError(SmmpipeError):
    module = "backends"
    exit_code = 3


class MalformedResponse(BackendError):
    def __init__(self, raw, allowed=()):
        self.raw = raw
        super().__init__(f"response {raw!r} is not one of {sorted(allowed)}")


class RemoteFailure(BackendError):
    pass


class MissingCredentials(BackendError):
    pass


class MissingPrediction(BackendError):
    def __init__(self, backend, sample_id):
        self.sample_id = sample_id
        super().__init__(f"backend {backend!r} has no prediction for sample {sample_id!r}")


class CorruptCacheFile(BackendError):
    pass


class BatchFailed(BackendError):
    def __init__(self, backend, failures, total):
        self.failures = failures
        shown = ", ".join(f"{sid}: {err}" for sid, err in list(failures.items())[:5])
        super().__init__(
            f"backend {backend!r}: {len(failures)}/{total} samples failed ({shown})"
        )


# pipelines ------------------------------------------------------------------

class PipelineError(SmmpipeError):
    module = "pipelines"
    exit_code = 1


class EmptyMemberList(PipelineError):
    def __init__(self, rule):
        super().__init__(f"{rule} needs at least one member label")


class InvalidPipelineSpec(PipelineError):
    pass


class RouterGap(PipelineError):
    exit_code = 2

    def __init__(self, pipeline, sample_id, platform):
        self.sample_id = sample_id
        self.platform = platform
        super().__init__(
            f"pipeline {pipeline!r}: no route for platform {platform!r} (sample {sample_id!r})"
        )


# evaluation -----------------------------------------------------------------

class IdMismatch(SmmpipeError):
    module = "evaluation"
    exit_code = 2

    def __init__(self, missing=(), extra=()):
        self.missing = sorted(missing)
        self.extra = sorted(extra)
        parts = []
        if self.missing:
            parts.append(f"missing predictions for {_head(self.missing)}")
        if self.extra:
            parts.append(f"unexpected predictions for {_head(self.extra)}")
        super().__init__("; ".join(parts) or "id sets differ")


def _head(ids, n=10):
    shown = ", ".join(map(repr, ids[:n]))
    return shown + (f" (+{len(ids) - n} more)" if len(ids) > n else "")


# cli ------------------------------------------------------------------------

class ConfigInvalid(SmmpipeError):
    module = "cli"
    exit_code = 1

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
