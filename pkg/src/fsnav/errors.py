"""Exception hierarchy shared across the harness."""

from __future__ import annotations


class FsnavError(Exception):
    """Base class for all harness errors."""


class ConfigError(FsnavError):
    """Missing or inconsistent configuration (index not built, bad config file, ...)."""


# corpus


class MalformedLine(FsnavError):
    def __init__(self, line_no: int, reason: str = ""):
        self.line_no = line_no
        self.reason = reason
        msg = f"malformed JSONL record at line {line_no}"
        super().__init__(f"{msg}: {reason}" if reason else msg)


class DuplicateId(FsnavError):
    def __init__(self, doc_id: str):
        self.doc_id = doc_id
        super().__init__(f"duplicate id: {doc_id!r}")


class IdCollisionAfterSanitize(FsnavError):
    def __init__(self, first: str, second: str, filename: str):
        self.ids = (first, second)
        self.filename = filename
        super().__init__(f"ids {first!r} and {second!r} both map to {filename!r}")


# retrieval


class EmptyCorpus(FsnavError):
    pass


class DimensionMismatch(FsnavError):
    pass


# gateway


class EndpointError(FsnavError):
    def __init__(self, status: int | None, body: str = ""):
        self.status = status
        self.body = body
        super().__init__(f"endpoint error (status={status}): {body[:500]}")


class Timeout(FsnavError):
    pass


class UnknownModel(FsnavError):
    def __init__(self, model: str):
        self.model = model
        super().__init__(f"no price entry for model {model!r}")


# runners


class InvalidOverlap(FsnavError):
    pass


class MissingVariable(FsnavError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"template variable {name!r} not provided")


class UnknownTool(FsnavError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown tool {name!r}")


class AgentSpawnError(FsnavError):
    pass


class AgentTimeout(FsnavError):
    pass


class AnswerExtractionFailure(FsnavError):
    pass


class RunError(FsnavError):
    """Wraps a failure inside one question's run so the id travels with it."""

    def __init__(self, question_id: str, cause: BaseException):
        self.question_id = question_id
        self.cause = cause
        super().__init__(f"question {question_id}: {cause}")


# evaluator


class NoChoiceFound(FsnavError):
    pass


class SampleTooLarge(FsnavError):
    pass


# trace


class SchemaError(FsnavError):
    def __init__(self, line: int, reason: str = ""):
        self.line = line
        super().__init__(f"trajectory schema error at line {line}: {reason}")


class EmptyInput(FsnavError):
    pass


class AllZero(FsnavError):
    pass
