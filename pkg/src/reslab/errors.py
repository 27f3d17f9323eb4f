"""Exception hierarchy shared by every module."""


class ReslabError(Exception):
    """Base class; ``exit_code`` is used by the command line front-end."""

    exit_code = 3


class ConfigInvalid(ReslabError):
    exit_code = 2

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


# schottky
class NonHyperbolicGenerator(ReslabError):
    pass


class DiskOverlap(ReslabError):
    pass


class SingularMatrix(ReslabError):
    pass


class CombinatorialOverflow(ReslabError):
    def __init__(self, estimate, cap):
        self.estimate = estimate
        self.cap = cap
        super().__init__(f"about {estimate} words requested, cap is {cap}")


class InsufficientScales(ReslabError):
    pass


# xfer
class BranchFailure(ReslabError):
    pass


class IllConditioned(ReslabError):
    pass


class NoConvergence(ReslabError):
    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message if residual is None else f"{message} (residual {residual:.3e})")


# billiard
class EclipseViolation(ReslabError):
    def __init__(self, triple):
        self.triple = tuple(triple)
        super().__init__(f"disk {triple[2]} shadows the chord between disks {triple[0]} and {triple[1]}")


class NonAdmissibleWord(ReslabError):
    pass


# thermo
class EmptyWindow(ReslabError):
    def __init__(self, windows):
        self.windows = list(windows)
        shown = ", ".join(f"[{a:.3g}, {b:.3g}]" for a, b in self.windows[:5])
        super().__init__(f"{len(self.windows)} empty window(s): {shown}")


class NoRootBracket(ReslabError):
    pass


class NoBracket(ReslabError):
    pass


# zeros
class BoundaryZero(ReslabError):
    def __init__(self, point, value):
        self.point = point
        self.value = value
        super().__init__(f"|F| = {abs(value):.3e} at boundary point {point}")


class NonConvergedSampling(ReslabError):
    pass


class MaxDepth(ReslabError):
    pass


class InsufficientWindows(ReslabError):
    pass


# fup
class CapExceeded(ReslabError):
    pass


class BoundViolation(ReslabError):
    """A computed quantity violates a bound it must satisfy."""
