"""
Synthetic biometric populations: one Gaussian cluster per identity.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Union

import numpy as np

from biomatch.errors import InvalidSpec
from biomatch.learner.network import LabeledSample

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SyntheticDataSpec:
    classes: int
    samples_per_class: int
    dimension: int
    scale: float = 10.0
    noise: float = 0.05
    seed: int = 0

    def validate(self) -> "SyntheticDataSpec":
        if self.classes < 2:
            raise InvalidSpec(f"need at least 2 classes, got {self.classes}")
        if self.samples_per_class < 1:
            raise InvalidSpec(f"need at least one sample per class, got {self.samples_per_class}")
        if self.dimension < 2:
            raise InvalidSpec(f"dimension must be at least 2, got {self.dimension}")
        if not np.isfinite(self.scale) or self.scale <= 0:
            raise InvalidSpec(f"center scale must be positive, got {self.scale}")
        if not np.isfinite(self.noise) or self.noise < 0:
            raise InvalidSpec(f"noise must be non-negative, got {self.noise}")
        if self.seed < 0:
            raise InvalidSpec(f"seed must be non-negative, got {self.seed}")
        return self


def gen_synthetic(spec: SyntheticDataSpec) -> List[LabeledSample]:
    """
    Draw class centers uniformly in [-scale, scale]^n and emit
    ``samples_per_class`` noisy copies of each, grouped by class.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    centers = rng.uniform(-spec.scale, spec.scale, size=(spec.classes, spec.dimension))
    offsets = rng.normal(0.0, spec.noise, size=(spec.classes, spec.samples_per_class, spec.dimension))
    samples = centers[:, None, :] + offsets
    logger.debug("generated %d x %d samples in dimension %d", spec.classes, spec.samples_per_class, spec.dimension)
    return [
        LabeledSample(samples[c, i], label=c)
        for c in range(spec.classes)
        for i in range(spec.samples_per_class)
    ]


def class_centers(spec: SyntheticDataSpec) -> np.ndarray:
    """The centers ``gen_synthetic`` uses for ``spec``."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    return rng.uniform(-spec.scale, spec.scale, size=(spec.classes, spec.dimension))


def write_dataset(samples: List[LabeledSample], destination: Union[str, Path]) -> None:
    """CSV with a ``label`` column followed by ``x0 .. x{n-1}``."""
    width = samples[0].x.size if samples else 0
    lines = [",".join(["label"] + [f"x{i}" for i in range(width)])]
    for sample in samples:
        lines.append(",".join([str(sample.label)] + [f"{v:.17g}" for v in sample.x.reshape(-1)]))
    Path(destination).write_text("\n".join(lines) + "\n")


def read_dataset(source: Union[str, Path]) -> List[LabeledSample]:
    lines = Path(source).read_text().splitlines()
    if not lines or not lines[0].startswith("label"):
        raise ValueError(f"{source} is not a dataset file")
    samples = []
    for line in lines[1:]:
        if line.strip():
            label, *values = line.split(",")
            samples.append(LabeledSample(np.array([float(v) for v in values]), label=int(label)))
    return samples
