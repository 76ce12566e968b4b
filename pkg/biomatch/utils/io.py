"""
Plain-text codecs for the CLI: probe files and ``key:value`` stdout records.
"""

import math
from pathlib import Path
from typing import Optional, Union

import numpy as np

from biomatch.errors import DimensionMismatch, NonFiniteInput


def read_probe(source: Union[str, Path], dimension: Optional[int] = None) -> np.ndarray:
    """One decimal float per line; blank lines are ignored."""
    values = []
    for number, line in enumerate(Path(source).read_text().splitlines(), start=1):
        text = line.strip()
        if not text:
            continue
        try:
            values.append(float(text))
        except ValueError as e:
            raise ValueError(f"{source}:{number}: not a number: {text!r}") from e
    probe = np.array(values, dtype=np.float64)
    if not np.all(np.isfinite(probe)):
        raise NonFiniteInput(f"{source} contains NaN or infinity")
    if dimension is not None and probe.size != dimension:
        raise DimensionMismatch(f"{source} has {probe.size} values, the extractor expects {dimension}")
    return probe


def write_probe(values, destination: Union[str, Path]) -> None:
    Path(destination).write_text("".join(f"{float(v):.17g}\n" for v in np.ravel(values)))


def format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "inf" if math.isinf(value) else repr(value)
    if isinstance(value, bytes):
        return value.hex()
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def record(**fields) -> str:
    """One stdout record: space-separated ``key:value`` pairs in argument order."""
    return " ".join(f"{key}:{format_value(value)}" for key, value in fields.items())


def parse_record(line: str) -> dict:
    out = {}
    for token in line.split():
        key, _, value = token.partition(":")
        out[key] = value
    return out
