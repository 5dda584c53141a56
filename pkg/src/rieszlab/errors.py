"""Exception hierarchy shared across the workbench.

The CLI maps these onto exit statuses: ValidationError -> 2,
NumericalContractError -> 3, ResourceLimitError -> 4.
"""


class RieszlabError(Exception):
    """Base class for all workbench errors."""


class ValidationError(RieszlabError):
    """Bad parameters or malformed configuration."""


class NumericalContractError(RieszlabError):
    """A numerical contract was violated (pole collision, non-convergence, ...)."""


class ResourceLimitError(RieszlabError):
    """A configured memory/size budget would be exceeded."""


class ResolutionError(NumericalContractError):
    """Quadrature panel count below the oscillation-resolution heuristic."""


class PoleCollisionError(NumericalContractError):
    """A contour or evaluation point passes too close to a pole."""


class TableFormatError(RieszlabError):
    """Base class for coefficient-cache file problems."""


class TableHeaderError(TableFormatError):
    """Header of a cache file is malformed."""


class TableChecksumError(TableFormatError):
    """Value block checksum mismatch (truncated or corrupted file)."""


class TableVersionError(TableFormatError):
    """Unknown magic bytes / format version."""
