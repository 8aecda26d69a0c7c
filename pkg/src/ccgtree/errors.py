"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class CCGTreeError(Exception):
    code = "ERROR"
    exit_code = 2


class CategorySyntaxError(CCGTreeError, ValueError):
    code = "SYNTAX"

    def __init__(self, message, text=None, position=None):
        if text is not None and position is not None:
            message = f"{message} at column {position + 1} in {text!r}"
        super().__init__(message)
        self.text = text
        self.position = position


class DepthExceeded(CCGTreeError, ValueError):
    code = "DEPTH_EXCEEDED"


class NoSuchNode(CCGTreeError, LookupError):
    code = "NO_SUCH_NODE"


class FormatError(CCGTreeError, ValueError):
    code = "FORMAT"

    def __init__(self, message, line=None, column=None, path=None):
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)
        self.line = line
        self.column = column


class EmptyCorpus(CCGTreeError, ValueError):
    code = "EMPTY_CORPUS"


class LengthMismatch(CCGTreeError, ValueError):
    code = "LENGTH_MISMATCH"


class AlignmentError(CCGTreeError, ValueError):
    code = "ALIGNMENT"


class CorpusMismatch(CCGTreeError, ValueError):
    code = "CORPUS_MISMATCH"


class CheckpointMismatch(CCGTreeError, ValueError):
    code = "CHECKPOINT_MISMATCH"


class ConfigError(CCGTreeError, ValueError):
    code = "CONFIG"
    exit_code = 1


class ShapeMismatch(CCGTreeError, ValueError):
    code = "SHAPE_MISMATCH"
    exit_code = 3


class NumericError(CCGTreeError, ArithmeticError):
    code = "NUMERIC"
    exit_code = 3
