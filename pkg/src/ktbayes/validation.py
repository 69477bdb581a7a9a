"""Shared input-validation helpers and error types."""

from __future__ import annotations


class SchemaError(ValueError):
    """Input file does not match the configured column schema."""


class ModelFormatError(ValueError):
    """Model file is malformed or has an unsupported version."""


def check_probability(name: str, value: float) -> float:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {value!r}")
    return float(value)


def check_binary(name: str, value: int) -> int:
    if value not in (0, 1):
        raise ValueError(f"{name} must be 0 or 1, got {value!r}")
    return int(value)


def check_positive(name: str, value: float) -> float:
    if not value > 0:
        raise ValueError(f"{name} must be > 0, got {value!r}")
    return value


def check_version_header(line: str, expected: int, path: str) -> None:
    """Validate the leading `#version=N` line of a model file."""
    if not line.startswith("#version="):
        raise ModelFormatError(f"{path}: missing #version header")
    try:
        version = int(line.split("=", 1)[1])
    except ValueError:
        raise ModelFormatError(f"{path}: unreadable #version header") from None
    if version != expected:
        raise ModelFormatError(
            f"{path}: unsupported version {version}, expected {expected}"
        )
