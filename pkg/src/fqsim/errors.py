"""Shared exception types."""


class ContractViolation(ValueError):
    """A numerical contract was violated (non-unitary gate, bad norm, ...)."""


class ResourceError(ValueError):
    """Problem size exceeds a configured cap (dense oracle limit)."""
