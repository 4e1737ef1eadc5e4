"""Exception types shared across the package."""


class DegenerateChannel(ValueError):
    """The user channel is (numerically) collinear with the target steering vector."""


class InfiniteErgodicCrb(ValueError):
    """An ergodic CRB is infinite because no power reaches the target through the data beam."""


class ConfigError(ValueError):
    """Malformed scenario or experiment configuration."""
