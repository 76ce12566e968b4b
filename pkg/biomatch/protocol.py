"""
Enrollment, verification and identification between a prover and a verifier.

The prover owns the feature extractor and only ever sends embeddings; the
verifier owns the gallery, issues identifiers and takes decisions. Both run in
one process and every exchanged message is appended to a ``Transcript``.
"""

import logging
import math
import struct
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, PositiveInt, model_validator

from biomatch import matcher
from biomatch.errors import AlreadyInitialized, DimensionMismatch, NotInitialized, SpaceMismatch
from biomatch.learner.network import NeuralNetwork, embed
from biomatch.matcher import DecisionReason, IdentificationResult, MatchDecision, ScoreSet
from biomatch.spaces import MetricPoint, Orientation, SpaceDescriptor, SpaceKind, compare
from biomatch.template_store import Gallery, TemplateRecord, check_lambda, encode_embedding, generate_id

logger = logging.getLogger(__name__)


class ExtractorRef(BaseModel):
    """Which model produced the embeddings: a name plus the model file's SHA-256."""

    model_config = ConfigDict(frozen=True)

    model_id: str
    digest: str


class SystemParams(BaseModel):
    lambda_bits: PositiveInt = Field(alias="lambda")
    space: SpaceDescriptor
    threshold: float
    capacity: PositiveInt
    extractor: ExtractorRef
    seed: NonNegativeInt = 0

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    @model_validator(mode="after")
    def _check(self) -> "SystemParams":
        check_lambda(self.lambda_bits)
        if not math.isfinite(self.threshold):
            raise ValueError("threshold must be finite")
        if self.space.orientation == Orientation.DISTANCE and self.threshold < 0:
            raise ValueError(f"distance threshold must be non-negative, got {self.threshold}")
        return self


# messages


class Direction(str, Enum):
    PROVER_TO_VERIFIER = "P->V"
    VERIFIER_TO_PROVER = "V->P"


class MessageKind(str, Enum):
    ENROLL_REQUEST = "EnrollRequest"
    ENROLL_RESPONSE = "EnrollResponse"
    VERIFY_REQUEST = "VerifyRequest"
    VERIFY_RESPONSE = "VerifyResponse"
    IDENTIFY_REQUEST = "IdentifyRequest"
    IDENTIFY_RESPONSE = "IdentifyResponse"


REASON_CODES = {DecisionReason.MATCH: 0, DecisionReason.NO_MATCH: 1, DecisionReason.UNKNOWN_ID: 2}


def _score_bytes(score: Optional[float]) -> bytes:
    return struct.pack("<d", math.nan if score is None else score)


@dataclass(frozen=True)
class EnrollRequest:
    embedding: MetricPoint
    kind = MessageKind.ENROLL_REQUEST
    direction = Direction.PROVER_TO_VERIFIER

    def payload(self) -> bytes:
        return encode_embedding(self.embedding)


@dataclass(frozen=True)
class EnrollResponse:
    identifier: bytes
    kind = MessageKind.ENROLL_RESPONSE
    direction = Direction.VERIFIER_TO_PROVER

    def payload(self) -> bytes:
        return self.identifier


@dataclass(frozen=True)
class VerifyRequest:
    identifier: bytes
    embedding: MetricPoint
    kind = MessageKind.VERIFY_REQUEST
    direction = Direction.PROVER_TO_VERIFIER

    def payload(self) -> bytes:
        return self.identifier + encode_embedding(self.embedding)


@dataclass(frozen=True)
class VerifyResponse:
    decision: MatchDecision
    kind = MessageKind.VERIFY_RESPONSE
    direction = Direction.VERIFIER_TO_PROVER

    def payload(self) -> bytes:
        head = struct.pack("<BB", self.decision.accept, REASON_CODES[self.decision.reason])
        return head + _score_bytes(self.decision.score)


@dataclass(frozen=True)
class IdentifyRequest:
    embedding: MetricPoint
    kind = MessageKind.IDENTIFY_REQUEST
    direction = Direction.PROVER_TO_VERIFIER

    def payload(self) -> bytes:
        return encode_embedding(self.embedding)


@dataclass(frozen=True)
class IdentifyResponse:
    result: IdentificationResult
    kind = MessageKind.IDENTIFY_RESPONSE
    direction = Direction.VERIFIER_TO_PROVER

    def payload(self) -> bytes:
        found = struct.pack("<B", self.result.identified)
        return found + (self.result.identifier or b"") + _score_bytes(self.result.best_score)


Message = Union[EnrollRequest, EnrollResponse, VerifyRequest, VerifyResponse, IdentifyRequest, IdentifyResponse]


@dataclass(frozen=True)
class TranscriptEntry:
    seq: int
    direction: Direction
    kind: MessageKind
    payload: bytes
    timestamp: float

    def line(self) -> str:
        return f"{self.seq},{self.direction.value},{self.kind.value},{self.payload.hex()}"


class Transcript:
    """
    Ordered message log. Exported lines are ``seq,direction,kind,payload-hex``;
    timestamps stay in memory so that exports are reproducible.
    """

    def __init__(self, clock: Callable[[], float] = time.time, start_seq: int = 0):
        self._clock = clock
        self._next = start_seq
        self._entries: List[TranscriptEntry] = []
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def entries(self) -> List[TranscriptEntry]:
        with self._lock:
            return list(self._entries)

    def record(self, message: Message) -> TranscriptEntry:
        with self._lock:
            entry = TranscriptEntry(self._next, message.direction, message.kind, message.payload(), self._clock())
            self._entries.append(entry)
            self._next += 1
        return entry

    def record_exchange(self, request: Message, response: Message) -> None:
        with self._lock:
            for message in (request, response):
                self._entries.append(
                    TranscriptEntry(self._next, message.direction, message.kind, message.payload(), self._clock())
                )
                self._next += 1

    def export(self) -> str:
        return "".join(entry.line() + "\n" for entry in self.entries)

    def write(self, destination: Union[str, Path], append: bool = False) -> None:
        with open(destination, "a" if append else "w") as f:
            f.write(self.export())


# roles


class Prover:
    """Holds the extractor; turns raw inputs into embeddings and requests."""

    def __init__(self, net: NeuralNetwork, space: SpaceDescriptor):
        self.net = net
        self.space = space

    def embed(self, x) -> MetricPoint:
        return embed(self.net, x, self.space)

    def enroll_request(self, x) -> EnrollRequest:
        return EnrollRequest(self.embed(x))

    def verify_request(self, identifier: bytes, x) -> VerifyRequest:
        return VerifyRequest(identifier, self.embed(x))

    def identify_request(self, x) -> IdentifyRequest:
        return IdentifyRequest(self.embed(x))


class Verifier:
    """Holds the gallery and the public parameters; never sees raw inputs."""

    def __init__(self, params: SystemParams, gallery: Gallery, rng: np.random.Generator):
        self.params = params
        self.gallery = gallery
        self.rng = rng
        self._enroll_lock = threading.Lock()

    def handle_enroll(self, request: EnrollRequest) -> EnrollResponse:
        with self._enroll_lock:
            identifier = generate_id(self.params.lambda_bits, self.gallery.ids(), self.rng)
            self.gallery.insert(TemplateRecord(identifier, request.embedding))
        return EnrollResponse(identifier)

    def handle_verify(self, request: VerifyRequest) -> VerifyResponse:
        record = self.gallery.lookup(request.identifier)
        if record is None:
            decision = MatchDecision(False, None, self.params.threshold, DecisionReason.UNKNOWN_ID)
        else:
            score = compare(self.params.space, request.embedding, record.embedding)
            decision = matcher.decide(score, self.params.threshold, self.params.space.orientation)
        return VerifyResponse(decision)

    def handle_identify(self, request: IdentifyRequest) -> IdentifyResponse:
        return IdentifyResponse(
            matcher.identify(self.gallery, request.embedding, self.params.threshold, self.params.space)
        )


def _check_extractor(net: NeuralNetwork, space: SpaceDescriptor) -> None:
    width = net.embedding_dim
    if space.kind == SpaceKind.LEVENSHTEIN:
        if width > space.dimension:
            raise DimensionMismatch(f"extractor emits {width} symbols, space allows at most {space.dimension}")
    elif width != space.dimension:
        raise DimensionMismatch(f"extractor emits dimension {width}, space has dimension {space.dimension}")


class BiometricSystem:
    """
    One biometric system handle. ``init`` runs once; afterwards the handle can
    be shared across threads.
    """

    def __init__(
        self,
        rng: Optional[np.random.Generator] = None,
        clock: Callable[[], float] = time.time,
        start_seq: int = 0,
    ):
        self.rng = rng if rng is not None else np.random.default_rng()
        self.transcript = Transcript(clock, start_seq)
        self.params: Optional[SystemParams] = None
        self.gallery: Optional[Gallery] = None
        self.prover: Optional[Prover] = None
        self.verifier: Optional[Verifier] = None
        self._init_lock = threading.Lock()

    @property
    def initialized(self) -> bool:
        return self.params is not None

    def init(
        self,
        lambda_bits: int,
        space: SpaceDescriptor,
        extractor: NeuralNetwork,
        t: float,
        capacity: int,
        extractor_ref: Optional[ExtractorRef] = None,
        seed: int = 0,
    ) -> Tuple[SystemParams, Gallery]:
        _check_extractor(extractor, space)
        ref = extractor_ref or ExtractorRef(model_id="in-memory", digest="")
        params = SystemParams(
            lambda_bits=lambda_bits, space=space, threshold=t, capacity=capacity, extractor=ref, seed=seed
        )
        return self.attach(params, Gallery(space, capacity, lambda_bits), extractor)

    def attach(
        self, params: SystemParams, gallery: Gallery, extractor: NeuralNetwork
    ) -> Tuple[SystemParams, Gallery]:
        """Bind existing parameters and gallery to this handle (counts as ``init``)."""
        _check_extractor(extractor, params.space)
        if gallery.space != params.space or gallery.capacity != params.capacity:
            raise SpaceMismatch("gallery does not match the system parameters")
        with self._init_lock:
            if self.initialized:
                raise AlreadyInitialized("init runs once per system")
            self.params = params
            self.gallery = gallery
            self.prover = Prover(extractor, params.space)
            self.verifier = Verifier(params, gallery, self.rng)
        logger.info(
            "system ready: %s space of dimension %d, threshold %r, capacity %d",
            params.space.kind.value,
            params.space.dimension,
            params.threshold,
            params.capacity,
        )
        return params, gallery

    def _require_init(self) -> None:
        if not self.initialized:
            raise NotInitialized("call init before using the system")

    def enroll(self, x) -> bytes:
        self._require_init()
        request = self.prover.enroll_request(x)
        response = self.verifier.handle_enroll(request)
        self.transcript.record_exchange(request, response)
        logger.debug("enrolled %s", response.identifier.hex())
        return response.identifier

    def verify(self, identifier: bytes, x) -> MatchDecision:
        self._require_init()
        request = self.prover.verify_request(identifier, x)
        response = self.verifier.handle_verify(request)
        self.transcript.record_exchange(request, response)
        return response.decision

    def identify_op(self, x) -> IdentificationResult:
        self._require_init()
        request = self.prover.identify_request(x)
        response = self.verifier.handle_identify(request)
        self.transcript.record_exchange(request, response)
        return response.result

    def calibrate(self, genuine: Sequence[float], impostor: Sequence[float]) -> Tuple[float, float]:
        """
        Set the threshold to the equal-error threshold of the given comparison
        scores (in the system's orientation) over the midpoint grid.
        """
        self._require_init()
        orientation = self.params.space.orientation
        gen = ScoreSet.of(genuine, matcher.ScoreLabel.GENUINE, orientation)
        imp = ScoreSet.of(impostor, matcher.ScoreLabel.IMPOSTOR, orientation)
        rate, t = matcher.eer(gen, imp, matcher.midpoint_grid(gen, imp))
        if orientation == Orientation.DISTANCE:
            t = max(t, 0.0)
        self.params = self.params.model_copy(update={"threshold": t})
        self.verifier.params = self.params
        logger.info("calibrated threshold %r (eer %.4f)", t, rate)
        return rate, t
