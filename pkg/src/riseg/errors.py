"""Exception types raised across the package."""


class RisegError(Exception):
    """Base class for all errors raised by riseg."""


class CollinearTriplet(RisegError):
    pass


class TripletTooWide(RisegError):
    pass


class DegenerateDt(RisegError):
    pass


class RotationNearPi(RisegError):
    pass


class PlacementFailure(RisegError):
    pass


class NoContact(RisegError):
    pass


class MismatchedScenes(RisegError):
    pass


class EmptyInput(RisegError):
    pass


class InsufficientFrames(RisegError):
    pass


class ClassStarvation(RisegError):
    pass


class ShapeMismatch(RisegError):
    pass


class NoGtObjects(RisegError):
    pass


class FormatError(RisegError):
    """A file did not match the expected on-disk layout."""
