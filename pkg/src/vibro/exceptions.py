"""Error taxonomy shared across the package.

``ValueError`` (and subclasses) marks invalid caller input; the remaining
classes mark conditions discovered while computing.
"""


class SizeLimitError(ValueError):
    """Input exceeds a hard cost guard (e.g. matrix too large for brute force)."""


class NumericError(RuntimeError):
    """A numerical contract failed (singular matrix, decomposition residual, ...)."""


class CutoffError(RuntimeError):
    """Photon-number cutoff left too much probability mass unaccounted for."""

    def __init__(self, message, deficit=None):
        super().__init__(message)
        self.deficit = deficit


class InconsistencyError(RuntimeError):
    """Input data violates a structural identity (e.g. non-real inverse DFT)."""


class RecoveryIncompleteError(RuntimeError):
    """Sparse peak recovery could not isolate all peaks; carries the subset found."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
