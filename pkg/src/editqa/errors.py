"""Shared exception hierarchy.

UserInputError covers everything caused by bad inputs or configuration
(manifest schema violations, malformed ratings, mismatched key sets, ...)
so the CLI can map it to exit code 2 uniformly.
"""


class UserInputError(ValueError):
    """Invalid input data or configuration supplied by the caller."""


class PartialFailureError(RuntimeError):
    """Some work items succeeded and some failed; details in ``failures``."""

    def __init__(self, message: str, failures: list[str] | None = None):
        super().__init__(message)
        self.failures = failures or []
