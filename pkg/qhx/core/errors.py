from __future__ import annotations


class QhxError(Exception):
    """Root of every error raised by the lab."""

    exit_code = 1


class ConfigError(QhxError, ValueError):
    exit_code = 2


class DomainError(ConfigError):
    """Invalid domain description or a query point outside the domain."""


class NumericalFailure(QhxError, RuntimeError):
    exit_code = 3
