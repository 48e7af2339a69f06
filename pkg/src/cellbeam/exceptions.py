"""Exception types shared by the solvers."""


class CellbeamError(Exception):
    """Base class for all solver errors."""


class InfeasibleError(CellbeamError):
    """The requested SINR target cannot be met (dual powers diverge or a
    power solve has no nonnegative solution)."""


class NotConvergedError(CellbeamError):
    """An iteration hit its sweep budget while the residual was still
    shrinking.  Carries the partial iterate when available."""

    def __init__(self, message, partial=None, residual=None):
        super().__init__(message)
        self.partial = partial
        self.residual = residual


class DimensionError(CellbeamError):
    """Not enough antennas for the requested zero-forcing construction."""


class RankError(CellbeamError):
    """Channel rows to be nulled are rank deficient (a measure-zero draw)."""
