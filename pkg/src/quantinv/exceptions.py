"""Exception hierarchy for quantinv.

Every error raised on purpose by the library derives from
:class:`QuantinvError`, so callers can catch the whole family at once.
"""

__all__ = [
    "QuantinvError",
    "InvalidSystem",
    "RankDeficientOutputMap",
    "SingularDynamics",
    "IndexOutOfRange",
    "MarginalSpectrum",
    "UnboundedTrap",
    "NotContractive",
    "NoFixpointAtResolution",
    "DimensionMismatch",
    "BudgetExceeded",
    "NotSeparated",
    "KMaxExceeded",
    "RepeatedExponent",
    "SystemFileError",
]


class QuantinvError(Exception):
    """Base class of all library errors."""


class InvalidSystem(QuantinvError, ValueError):
    """A system description violates a structural invariant
    (shapes, empty or duplicated alphabet, non-positive rate...)."""


class RankDeficientOutputMap(InvalidSystem):
    """The output map ``C`` does not have full row rank ``p``."""


class SingularDynamics(QuantinvError, ValueError):
    """An affine map cannot be inverted: its linear part is
    (numerically) singular."""


class IndexOutOfRange(QuantinvError, IndexError):
    """An input index does not select a map of the system."""


class MarginalSpectrum(QuantinvError, ValueError):
    """Some eigenvalue has modulus one within the marginal tolerance.

    The contractive/expansive splitting is undefined in that case.
    """

    def __init__(self, message, eigvals=None):
        super().__init__(message)
        self.eigvals = eigvals


class UnboundedTrap(QuantinvError):
    """``A`` has an invariant subspace inside the unquantized coordinates,
    so orbits can stay in the strip while drifting to infinity."""

    def __init__(self, message, chain=None):
        super().__init__(message)
        self.chain = chain


class NotContractive(QuantinvError, ValueError):
    """An IFS expected to be jointly contractive is not."""


class NoFixpointAtResolution(QuantinvError):
    """The cover iteration did not stabilise within the iteration cap."""

    def __init__(self, message, cover=None):
        super().__init__(message)
        self.cover = cover


class DimensionMismatch(QuantinvError, ValueError):
    """Two covers (or a cover and a map) live in different spaces."""


class BudgetExceeded(QuantinvError):
    """A configured work budget (vertices, cells, LPs, nodes) ran out."""


class NotSeparated(QuantinvError):
    """A cover touches the boundary of the safe set, so no stopping depth
    can separate pieces at this resolution."""


class KMaxExceeded(QuantinvError):
    """No stopping depth was found up to ``k_max``."""


class RepeatedExponent(QuantinvError, ValueError):
    """Exponents handed to :func:`quantinv.analyzer.lw_matrix` repeat."""


class SystemFileError(QuantinvError, ValueError):
    """A system description file could not be parsed.

    Attributes
    ----------
    path : str or None
    line : int or None
        1-based line number of the offending construct, when known.
    """

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = str(path)
        if line is not None:
            loc = f"{loc}:{line}" if loc else f"line {line}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.path = path
        self.line = line
