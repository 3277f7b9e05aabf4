"""Exception types shared across the package."""


class DopError(ValueError):
    """Base class for data errors raised by this package."""


class TreebankError(DopError):
    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} at offset {position}"
        super().__init__(message)
        self.position = position


class UnbalancedParens(TreebankError):
    pass


class EmptyNode(TreebankError):
    pass


class ReservedLabel(TreebankError):
    pass


class IrreversibleScheme(DopError):
    pass


class ArityViolation(DopError):
    pass


class SubtreeCapExceeded(DopError):
    def __init__(self, count, cap):
        super().__init__(f"corpus has {count} subtrees, cap is {cap}")
        self.count = count


class EnumerationCapExceeded(DopError):
    pass


class NoParse(DopError):
    pass


class ZeroLength(DopError):
    pass


class CorpusTooSmall(DopError):
    pass


class YieldMismatch(DopError):
    pass


class DegenerateVariance(DopError):
    pass


class EmptyCorpus(DopError):
    pass
