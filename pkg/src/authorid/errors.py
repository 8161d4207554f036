"""Exception hierarchy shared by every stage of the pipeline."""


class AuthorIdError(Exception):
    """Base class for all library errors."""


# graph loading

class MalformedLine(AuthorIdError, ValueError):
    def __init__(self, path, lineno, reason):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{self.path}:{lineno}: {reason}")


class DuplicateNodeId(MalformedLine):
    pass


class UnknownNodeType(MalformedLine):
    pass


class UnknownNode(AuthorIdError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown node"


class SchemaViolation(AuthorIdError, ValueError):
    pass


# meta paths

class UnknownTypeCode(AuthorIdError, ValueError):
    pass


class NoSchemaLink(AuthorIdError, ValueError):
    pass


class UnsupportedLength(AuthorIdError, ValueError):
    pass


class TypeMismatch(AuthorIdError, ValueError):
    pass


class AdjacencyOverflow(AuthorIdError, OverflowError):
    pass


class EmptyAdjacency(AuthorIdError, ValueError):
    pass


# sampling

class EmptyWeights(AuthorIdError, ValueError):
    pass


class AllZeroWeights(AuthorIdError, ValueError):
    pass


class NoEligibleNodes(AuthorIdError, ValueError):
    pass


class NoPaths(AuthorIdError, ValueError):
    pass


class ExhaustedRejection(AuthorIdError, RuntimeError):
    pass


# model / training

class EmptyInstance(AuthorIdError, ValueError):
    pass


class UnknownAuthor(AuthorIdError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown author"


class NonFiniteUpdate(AuthorIdError, FloatingPointError):
    pass


class ConfigConflict(AuthorIdError, ValueError):
    pass


# evaluation

class EmptyTruth(AuthorIdError, ValueError):
    pass


class InsufficientAuthors(AuthorIdError, ValueError):
    pass


class UsageError(AuthorIdError):
    pass
