"""Exception hierarchy shared by every module of the package."""


class Rank1SenseError(Exception):
    """Base class for all errors raised by rank1sense."""


class InvalidParameter(Rank1SenseError, ValueError):
    pass


class DimensionMismatch(Rank1SenseError, ValueError):
    pass


class RankDeficient(Rank1SenseError, ArithmeticError):
    pass


class NotOrthonormal(Rank1SenseError, ValueError):
    pass


class NotUnit(Rank1SenseError, ValueError):
    pass


class NotOrthogonal(Rank1SenseError, ValueError):
    pass


class SingularB(Rank1SenseError, ArithmeticError):
    """The kd x kd block matrix B is numerically singular."""


class IllConditioned(Rank1SenseError, ArithmeticError):
    pass


class SketchRankDeficient(Rank1SenseError, ArithmeticError):
    """The sketched design matrix lost rank on every retry."""


class NoConvergence(Rank1SenseError, ArithmeticError):
    pass


class InsufficientSamples(Rank1SenseError, ValueError):
    pass


class RankCollapse(Rank1SenseError, ArithmeticError):
    """A least-squares factor update came back rank deficient."""
