# SPDX-License-Identifier: Apache-2.0
"""Per-step logits hook for stage-aware structured-output control."""

from ._core import (
    ConfigError,
    InvalidInput,
    close_session,
    f64_from_hex,
    f64_to_hex,
    open_session,
    softmax,
    step,
    summary,
    validate,
)

__all__ = [
    "ConfigError",
    "InvalidInput",
    "close_session",
    "f64_from_hex",
    "f64_to_hex",
    "open_session",
    "softmax",
    "step",
    "summary",
    "validate",
]
