"""Exception types raised across the toolkit.

All errors subclass ValueError so callers that do not care about the
specific failure can still catch one base class.
"""


class AugmentorError(ValueError):
    pass


# geometry
class NonPositiveDepth(AugmentorError):
    pass


class RayParallelToPlane(AugmentorError):
    pass


class IntersectionBehindCamera(AugmentorError):
    pass


class DegeneratePlane(AugmentorError):
    pass


class EmptyExtent(AugmentorError):
    pass


# assets
class MalformedRecord(AugmentorError):
    def __init__(self, line_no, message):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class IndexOutOfRange(AugmentorError):
    def __init__(self, line_no, message):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class EmptyMesh(AugmentorError):
    pass


class OffPlanePose(AugmentorError):
    pass


# envmap
class BadAspect(AugmentorError):
    pass


class NonUnitDirection(AugmentorError):
    pass


class MissingTrueMap(AugmentorError):
    pass


class EmptyPool(AugmentorError):
    pass


# placement
class EmptyTrajectorySet(AugmentorError):
    pass


class EmptyRoadMask(AugmentorError):
    pass


# renderer
class DuplicateInstanceId(AugmentorError):
    pass


# postfx
class NegativeStrength(AugmentorError):
    pass


# compositor
class DimensionMismatch(AugmentorError):
    pass


class MissingRealImage(AugmentorError):
    pass


# pipeline
class ParseError(AugmentorError):
    pass


class UnknownKey(AugmentorError):
    pass


class RangeViolation(AugmentorError):
    pass


class MissingStrategyInput(AugmentorError):
    pass


class CorruptManifest(AugmentorError):
    pass
