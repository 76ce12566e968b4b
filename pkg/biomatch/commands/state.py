"""
On-disk state of a deployed system, shared by init / enroll / verify /
identify: ``params.json``, ``gallery.bmdb`` and ``transcript.log`` under the
configured state directory.
"""

import json
import logging
from pathlib import Path
from typing import Tuple

import numpy as np
from pydantic import BaseModel, NonNegativeInt

from biomatch import template_store
from biomatch.config import GALLERY_FILE, PARAMS_FILE, TRANSCRIPT_FILE
from biomatch.config.config_loader import DeploymentConfig
from biomatch.errors import AlreadyInitialized, ConfigError, NotInitialized
from biomatch.learner.model_io import load_model, model_digest
from biomatch.learner.network import NeuralNetwork
from biomatch.protocol import BiometricSystem, SystemParams
from biomatch.template_store import Gallery

logger = logging.getLogger(__name__)

ID_SEED_OFFSET = 3


class StoredState(BaseModel):
    params: SystemParams
    model_path: str
    enroll_count: NonNegativeInt = 0
    transcript_seq: NonNegativeInt = 0


class StatePaths:
    def __init__(self, state_dir: str):
        self.root = Path(state_dir)
        self.params = self.root / PARAMS_FILE
        self.gallery = self.root / GALLERY_FILE
        self.transcript = self.root / TRANSCRIPT_FILE

    @property
    def exists(self) -> bool:
        return self.params.exists()


def create_state(config: DeploymentConfig, params: SystemParams, gallery: Gallery, force: bool = False) -> StatePaths:
    paths = StatePaths(config.state_dir)
    if paths.exists and not force:
        raise AlreadyInitialized(f"system state already exists in {paths.root}")
    paths.root.mkdir(parents=True, exist_ok=True)
    state = StoredState(params=params, model_path=str(Path(config.model_path).resolve()))
    paths.params.write_text(state.model_dump_json(by_alias=True, indent=2))
    template_store.save(gallery, paths.gallery)
    paths.transcript.write_text("")
    logger.info("initialised system state in %s", paths.root)
    return paths


def load_state(config: DeploymentConfig) -> Tuple[StatePaths, StoredState, BiometricSystem]:
    """Rebuild the system handle; identifiers are drawn from (seed + 3, enroll count)."""
    paths = StatePaths(config.state_dir)
    if not paths.exists:
        raise NotInitialized(f"no system state in {paths.root}; run 'biomatch init' first")
    state = StoredState.model_validate(json.loads(paths.params.read_text()))
    net = _load_extractor(state)
    gallery = template_store.load(paths.gallery)
    rng = np.random.default_rng([state.params.seed + ID_SEED_OFFSET, state.enroll_count])
    system = BiometricSystem(rng=rng, start_seq=state.transcript_seq)
    system.attach(state.params, gallery, net)
    return paths, state, system


def _load_extractor(state: StoredState) -> NeuralNetwork:
    digest = model_digest(state.model_path)
    if digest != state.params.extractor.digest:
        raise ConfigError(f"model file {state.model_path} changed since init (digest {digest[:12]})")
    return load_model(state.model_path)


def save_state(paths: StatePaths, state: StoredState, system: BiometricSystem, enrolled: int = 0) -> None:
    updated = state.model_copy(
        update={
            "params": system.params,
            "enroll_count": state.enroll_count + enrolled,
            "transcript_seq": state.transcript_seq + len(system.transcript),
        }
    )
    paths.params.write_text(updated.model_dump_json(by_alias=True, indent=2))
    if enrolled:
        template_store.save(system.gallery, paths.gallery)
    system.transcript.write(paths.transcript, append=True)
