class ModeDomainError(ValueError):
    """A mode is evanescent or does not couple to centered z dipoles"""


class SeriesDomainError(ValueError):
    """A closed-form solution was requested outside its regime"""


class SeriesUnavailableError(SeriesDomainError):
    """No closed form exists for the requested number of modes"""


class SolverError(ArithmeticError):
    """The delay-equation integration could not be carried out"""
