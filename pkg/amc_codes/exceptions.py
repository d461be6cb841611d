"""Exceptions raised by amc_codes."""


class AMCError(Exception):
    pass


class ImproperlyConfigured(AMCError):
    """A setting, config file entry or command line flag has an invalid value."""


class InvariantError(AMCError, AssertionError):
    """An internal invariant does not hold, e.g. a boundary composition is nonzero."""


class TrivialCodeError(AMCError, ValueError):
    pass


class GroupMismatchError(AMCError, ValueError):
    pass


class ParseError(AMCError, ValueError):
    pass


class UnmatchableSyndromeError(AMCError, ValueError):
    pass
