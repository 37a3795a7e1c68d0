"""Exception types raised across the package."""

import numpy as np


class NotPositiveDefinite(np.linalg.LinAlgError):
    """A Gram matrix that should be positive definite is singular or indefinite.

    For channel Gram matrices this means the users' channels are linearly
    dependent in the relevant (complex or composite-real) space, e.g. more
    than ``M`` users for linear ZF or more than ``2M`` users for WL ZF.
    """


class ZeroVector(ValueError):
    pass


class ZeroChannel(ZeroVector):
    pass


class ZeroPrecoder(ValueError):
    pass


class ZeroGain(ValueError):
    pass


class NonPositiveGain(ValueError):
    pass


class WrongKind(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class InvalidConfig(ValueError):
    """Raised by the experiment runner; the message names the offending field."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
