"""Exception hierarchy.

Every error raised by this package derives from :class:`HyperwaveError`.
The three intermediate classes carry the process exit code used by the
command-line front end: configuration problems exit with 2, data problems
with 3, numerical failures with 4.
"""


class HyperwaveError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(HyperwaveError):
    """Invalid configuration (bad file, bad value, unknown key)."""

    exit_code = 2


class DataError(HyperwaveError):
    """Invalid or inconsistent input data."""

    exit_code = 3


class NumericalError(HyperwaveError):
    """A numerical routine failed to produce a usable result."""

    exit_code = 4


# -- hypergraph construction ------------------------------------------------

class EmptyEdgeError(DataError):
    """A hyperedge with no member vertices."""


class IsolatedVertexError(DataError):
    """A vertex that belongs to no hyperedge."""


class IndexOutOfRangeError(DataError):
    """A vertex or edge index outside the valid range."""


class DimensionMismatchError(DataError):
    """A signal or feature matrix with the wrong number of rows."""


# -- dense oracles and spectra ----------------------------------------------

class SizeCapExceededError(DataError):
    """A dense materialization was requested above the configured cap."""


class NotTwoUniformError(DataError):
    """An operation restricted to 2-uniform hypergraphs got a general one."""


class EigenSolverError(NumericalError):
    """The eigensolver did not converge or returned invalid output."""


# -- spatial pipeline --------------------------------------------------------

class DegenerateGeometryError(DataError):
    """Point set unusable for triangulation (e.g. all collinear)."""


class TooFewPointsError(DataError):
    """Not enough points to build the requested proximity graph."""


class ZeroLibraryCellError(DataError):
    """A cell whose total expression count is zero."""


class UnknownLabelError(DataError):
    """A categorical value outside its declared vocabulary."""


# -- evaluation ---------------------------------------------------------------

class ZeroRowError(DataError):
    """A zero feature row where a cosine kernel needs a direction."""


class SingleClassError(DataError):
    """Fewer than two distinct classes in a classification target."""


class ClassTooSmallError(DataError):
    """A class with too few members to split into train and test."""


# -- files and serialization ---------------------------------------------------

class ParseError(DataError):
    """Malformed input file; message carries file, line and column."""


class MissingCellError(DataError):
    """An expression record referencing an unknown cell id."""


class DuplicateCellError(DataError):
    """The same cell id appearing twice."""


class FormatError(DataError):
    """A binary artifact with a bad magic header or truncated payload."""


# -- configuration -------------------------------------------------------------

class InvalidScalesError(ConfigError):
    """An invalid diffusion scale sequence."""


class InvalidGeneratorConfigError(ConfigError):
    """An invalid synthetic-data generator configuration."""
