class NCTorusError(ValueError):
    """Base class for every error raised by the verification engine"""


class DimensionMismatchError(NCTorusError):
    pass


class EmptyInteriorError(NCTorusError):
    pass


class NonHermitianError(NCTorusError):
    pass


class ParameterError(NCTorusError):
    """Invalid or inconsistent run parameters (exit code 2 at the CLI)"""


class ConvergenceError(NCTorusError):
    pass
