"""Exception hierarchy.

Two families matter to callers: :class:`InputError` (malformed data or
configuration, CLI exit code 2) and :class:`DomainError` (well-formed input on
which a metric or detector is undefined, CLI exit code 3).
"""


class RacelikeError(Exception):
    """Base class for every error raised by this package."""


class InputError(RacelikeError, ValueError):
    exit_code = 2


class DomainError(RacelikeError):
    exit_code = 3


# construction / validation
class SchemaError(InputError):
    pass


class DuplicateId(InputError):
    pass


class FeatureLengthMismatch(InputError):
    pass


class NonBinaryFeature(InputError):
    pass


class PartialLatentLabels(InputError):
    pass


class SelfLoop(InputError):
    pass


class UnknownNode(InputError):
    pass


class UnassignedIndividual(InputError):
    pass


class UnknownGroup(InputError):
    pass


class MissingReference(InputError):
    pass


class ConfigError(InputError):
    pass


# linear algebra
class TooFewRows(InputError):
    pass


class AsymmetricMatrix(InputError):
    pass


class ComponentCountError(InputError):
    pass


class LengthMismatch(InputError):
    pass


# domain failures
class DegenerateSegregation(DomainError):
    """Aggregated feature rows do not vary, so there is no axis to split on."""


class EmptyGroup(DomainError):
    pass


class EmptyGraph(DomainError):
    pass


class UndefinedAssortativity(DomainError):
    pass


class NoPositives(DomainError):
    pass
