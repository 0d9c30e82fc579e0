"""Exception types shared across the package."""


class DataError(ValueError):
    """Bad input data. The CLI maps these to exit status 2."""


class CorpusParseError(DataError):
    def __init__(self, message, doc_id=None, position=None):
        where = []
        if doc_id is not None:
            where.append(f"doc {doc_id!r}")
        if position is not None:
            where.append(f"byte {position}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)
        self.doc_id = doc_id
        self.position = position


class IntegrityError(DataError):
    pass


class RelationFormatError(DataError):
    pass


class TreeSyntaxError(DataError):
    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} at position {position}"
        super().__init__(message)
        self.position = position


class ScoringError(DataError):
    pass


class ModelFormatError(DataError):
    pass


class ConfigError(Exception):
    pass


class TrainingError(Exception):
    pass
