"""Exception hierarchy shared by every structure in the package."""


class PhysMemError(Exception):
    pass


class ConfigError(PhysMemError, ValueError):
    """Invalid pool, geometry or benchmark configuration."""


class OutOfBlocksError(PhysMemError, MemoryError):
    """The block pool has no free block left. Pools never grow."""


class UsageError(PhysMemError, RuntimeError):
    """API misuse: double release, foreign handle, use after destroy, pop on empty."""


class BoundsError(PhysMemError, IndexError):
    pass


class CapacityError(PhysMemError, ValueError):
    """Array length exceeds what the deepest supported tree can address."""


class FrameSizeError(PhysMemError, ValueError):
    """A stack frame cannot fit in a single block."""


class ChecksumMismatchError(PhysMemError):
    """Implementation variants of the same workload disagree."""
