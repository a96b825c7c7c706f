# SPDX-License-Identifier: Apache-2.0
"""Deterministic microgrid digital twin with a supervisory controller."""

from ._core import (
    PROTO_VERSION,
    GridloopError,
    Record,
    Scenario,
    Simulation,
    ValidationError,
    command_names,
    crc16,
    csv_groups,
    decode_meter_frame,
    encode_meter_frame,
    frame_message,
    register_to_si,
    run,
)

__all__ = [
    "PROTO_VERSION",
    "GridloopError",
    "Record",
    "Scenario",
    "Simulation",
    "ValidationError",
    "command_names",
    "crc16",
    "csv_groups",
    "decode_meter_frame",
    "encode_meter_frame",
    "frame_message",
    "register_to_si",
    "run",
]
