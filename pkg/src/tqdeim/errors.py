"""Exception types shared across the package."""

import numpy as np


class DimensionError(ValueError):
    """Operand shapes are not conformable."""


class ConjugateSymmetryError(ValueError):
    """Inverse transform left a non-negligible imaginary part."""


class RankError(ValueError):
    """Requested rank is outside the admissible range."""


class SingularSliceError(np.linalg.LinAlgError):
    """A Fourier frontal slice is (numerically) singular.

    ``slice_index`` is 1-based, matching the frontal-slice numbering used
    in file formats and reports.
    """

    def __init__(self, slice_index, cond):
        self.slice_index = slice_index
        self.cond = cond
        super().__init__(
            f"Fourier frontal slice {slice_index} is singular "
            f"(condition estimate {cond:.3e})"
        )


class ConditioningWarning(RuntimeWarning):
    """A Fourier frontal slice is badly conditioned but still invertible."""


class FormatError(ValueError):
    """Malformed or inconsistent file on disk."""


class ConsistencyError(FormatError):
    """Files of a model bundle disagree with each other."""


class StabilityError(ValueError):
    """Time step violates the explicit-step stability restriction."""


class DivergenceError(RuntimeError):
    """Time integration blew up."""
