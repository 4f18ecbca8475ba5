"""Exception hierarchy shared across the package."""


class DedupixError(Exception):
    """Base class for every error raised by dedupix."""


# image I/O
class MalformedHeader(DedupixError, ValueError):
    pass


class TruncatedPayload(DedupixError, ValueError):
    pass


class UnsupportedMaxval(DedupixError, ValueError):
    pass


class LengthMismatch(DedupixError, ValueError):
    pass


# preprocessing
class BadKernelSize(DedupixError, ValueError):
    pass


class ImageTooSmall(DedupixError, ValueError):
    pass


class BadThresholds(DedupixError, ValueError):
    pass


class BadDecay(DedupixError, ValueError):
    pass


class BadEpsilon(DedupixError, ValueError):
    pass


# clustering
class BadK(DedupixError, ValueError):
    pass


class EmptyInput(DedupixError, ValueError):
    pass


class BadC(DedupixError, ValueError):
    pass


class BadFuzziness(DedupixError, ValueError):
    pass


# mlp
class DimensionMismatch(DedupixError, ValueError):
    pass


class ShapeMismatch(DedupixError, ValueError):
    pass


class OntologyError(DedupixError, ValueError):
    pass


# quadtree / identity / merkle
class EmptyImage(DedupixError, ValueError):
    pass


class MissingChunk(DedupixError, LookupError):
    def __init__(self, missing):
        self.missing = sorted(missing)
        super().__init__(f"missing chunks at {self.missing}")


class ChunkTooSmall(DedupixError, ValueError):
    pass


class NonCanonicalInput(DedupixError, ValueError):
    pass


class CountMismatch(DedupixError, ValueError):
    pass


# store / transfer
class IoFailure(DedupixError, OSError):
    pass


class CorruptIndex(DedupixError):
    def __init__(self, digests):
        self.digests = list(digests)
        super().__init__("corrupt store entries: " + ", ".join(d.hex() for d in self.digests))


class DigestMismatch(DedupixError, ValueError):
    pass


class RootMismatch(DedupixError):
    pass


class ProtocolViolation(DedupixError):
    pass


class PeerProtocolError(DedupixError):
    pass


class ConnectionLost(DedupixError, ConnectionError):
    pass


class ConfigError(DedupixError, ValueError):
    pass
