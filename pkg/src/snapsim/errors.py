class ConfigInvalid(ValueError):
    """Experiment configuration rejected before any simulation runs."""


class ConsistencyViolation(RuntimeError):
    """A captured snapshot failed the consistent-cut check. Always a bug."""
