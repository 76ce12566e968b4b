"""
End-to-end evaluation: generate a synthetic population, train the extractor,
enroll one template per identity, score held-out probes and write the ROC,
scores, model, gallery and report artifacts.
"""

import hashlib
import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Iterator, List, NamedTuple, Optional, Sequence

import numpy as np
from pydantic import BaseModel, NonNegativeFloat, NonNegativeInt, PositiveFloat, PositiveInt, model_validator

from biomatch import matcher, template_store
from biomatch.errors import StageError
from biomatch.harness.report import ExperimentReport, ScoreRow, score_sets, write_report, write_scores
from biomatch.harness.synthetic import SyntheticDataSpec, gen_synthetic
from biomatch.learner.layers import ActivationKind
from biomatch.learner.model_io import encode_model, save_model
from biomatch.learner.network import LabeledSample, NeuralNetwork
from biomatch.learner.training import Loss, TrainingConfig, train
from biomatch.matcher import ScoreLabel
from biomatch.protocol import BiometricSystem, ExtractorRef
from biomatch.spaces import MetricPoint, SpaceDescriptor, SpaceKind, compare

logger = logging.getLogger(__name__)

# dotted config key -> ExperimentConfig field
EXPERIMENT_KEYS = {
    "seed": "seed",
    "lambda": "lambda_bits",
    "capacity": "capacity",
    "space.kind": "space_kind",
    "data.classes": "classes",
    "data.samples": "samples_per_class",
    "data.dim": "dimension",
    "data.scale": "scale",
    "data.noise": "noise",
    "model.hidden": "hidden",
    "model.activation": "activation",
    "train.lr": "learning_rate",
    "train.epochs": "epochs",
    "train.loss": "loss",
    "score.probes": "probes_per_identity",
    "score.impostor_cap": "impostor_cap",
    "output.dir": "output_dir",
}


class Seeds(NamedTuple):
    data: int
    weights: int
    ids: int
    impostors: int


class ExperimentConfig(BaseModel):
    seed: NonNegativeInt = 0
    lambda_bits: PositiveInt = 64
    capacity: PositiveInt = 1000
    space_kind: SpaceKind = SpaceKind.EUCLIDEAN
    classes: PositiveInt = 8
    samples_per_class: PositiveInt = 10
    dimension: PositiveInt = 16
    scale: PositiveFloat = 10.0
    noise: NonNegativeFloat = 0.05
    hidden: List[PositiveInt] = [32]
    activation: ActivationKind = ActivationKind.RELU
    learning_rate: PositiveFloat = 0.01
    epochs: PositiveInt = 200
    loss: Loss = Loss.CROSS_ENTROPY
    probes_per_identity: PositiveInt = 4
    impostor_cap: PositiveInt = 5000
    output_dir: str = "biomatch-out"

    @model_validator(mode="after")
    def _check(self) -> "ExperimentConfig":
        if self.samples_per_class < self.probes_per_identity + 1:
            raise ValueError(
                f"each identity needs one enrollment sample plus {self.probes_per_identity} probes, "
                f"got {self.samples_per_class} samples"
            )
        if self.activation == ActivationKind.SOFTMAX:
            raise ValueError("softmax is reserved for the output head")
        return self

    @property
    def seeds(self) -> Seeds:
        return Seeds(self.seed + 1, self.seed + 2, self.seed + 3, self.seed + 4)

    def data_spec(self) -> SyntheticDataSpec:
        return SyntheticDataSpec(
            classes=self.classes,
            samples_per_class=self.samples_per_class,
            dimension=self.dimension,
            scale=self.scale,
            noise=self.noise,
            seed=self.seeds.data,
        )

    def training_config(self) -> TrainingConfig:
        return TrainingConfig(learning_rate=self.learning_rate, epochs=self.epochs, loss=self.loss, seed=self.seed)

    def echo(self) -> Dict[str, str]:
        values = self.model_dump(mode="json")
        out = {}
        for key, field_name in EXPERIMENT_KEYS.items():
            value = values[field_name]
            out[key] = ",".join(str(v) for v in value) if isinstance(value, list) else str(value)
        return out


class DatasetSplit(NamedTuple):
    enroll: List[LabeledSample]
    probes: List[List[LabeledSample]]
    train: List[LabeledSample]


def split_dataset(samples: Sequence[LabeledSample], probes_per_identity: int) -> DatasetSplit:
    """
    Per identity (in label order): the first sample is enrolled, the next
    ``probes_per_identity`` are held out as probes, and everything except the
    probes is used for training.
    """
    by_label: Dict[int, List[LabeledSample]] = {}
    for sample in samples:
        by_label.setdefault(sample.label, []).append(sample)
    enroll, probes, training = [], [], []
    for label in sorted(by_label):
        group = by_label[label]
        if len(group) < probes_per_identity + 1:
            raise ValueError(f"identity {label} has {len(group)} samples, needs {probes_per_identity + 1}")
        enroll.append(group[0])
        probes.append(group[1 : probes_per_identity + 1])
        training.append(group[0])
        training.extend(group[probes_per_identity + 1 :])
    return DatasetSplit(enroll, probes, training)


def collect_scores(
    space: SpaceDescriptor,
    templates: Sequence[MetricPoint],
    probes: Sequence[Sequence[MetricPoint]],
    impostor_cap: int,
    rng: np.random.Generator,
) -> List[ScoreRow]:
    """
    Genuine scores for every probe against its own template, impostor scores
    for every probe against every other template (uniformly subsampled down to
    ``impostor_cap``). Rows come back ordered by (identity, probe, template).
    """
    rows: List[ScoreRow] = []
    for identity, identity_probes in enumerate(probes):
        for index, probe in enumerate(identity_probes):
            for template_index, template in enumerate(templates):
                label = ScoreLabel.GENUINE if template_index == identity else ScoreLabel.IMPOSTOR
                rows.append(ScoreRow(identity, index, template_index, label, compare(space, probe, template)))
    impostor_positions = [i for i, row in enumerate(rows) if row.label == ScoreLabel.IMPOSTOR]
    if len(impostor_positions) > impostor_cap:
        keep = set(rng.choice(impostor_positions, size=impostor_cap, replace=False).tolist())
        rows = [row for i, row in enumerate(rows) if row.label == ScoreLabel.GENUINE or i in keep]
    return rows


@contextmanager
def _stage(name: str) -> Iterator[None]:
    logger.info("stage: %s", name)
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        raise StageError(name, e) from e


def run_experiment(cfg: ExperimentConfig, output_dir: Optional[Path] = None) -> ExperimentReport:
    out = Path(output_dir if output_dir is not None else cfg.output_dir)
    seeds = cfg.seeds

    with _stage("generate"):
        split = split_dataset(gen_synthetic(cfg.data_spec()), cfg.probes_per_identity)

    with _stage("train"):
        net = NeuralNetwork.mlp(
            [cfg.dimension, *cfg.hidden, cfg.classes],
            hidden=cfg.activation,
            head=ActivationKind.SOFTMAX,
            seed=seeds.weights,
        )
        net = train(net, split.train, cfg.training_config())

    with _stage("enroll"):
        space = SpaceDescriptor(kind=cfg.space_kind, dimension=net.embedding_dim)
        system = BiometricSystem(rng=np.random.default_rng(seeds.ids), clock=lambda: 0.0)
        digest = hashlib.sha256(encode_model(net)).hexdigest()
        ref = ExtractorRef(model_id="model.bmnn", digest=digest)
        system.init(cfg.lambda_bits, space, net, 0.0, cfg.capacity, ref, cfg.seed)
        ids = [system.enroll(sample.x) for sample in split.enroll]

    with _stage("score"):
        templates = [system.gallery.lookup(identifier).embedding for identifier in ids]
        probe_points = [[system.prover.embed(p.x) for p in group] for group in split.probes]
        rows = collect_scores(space, templates, probe_points, cfg.impostor_cap, np.random.default_rng(seeds.impostors))

    with _stage("evaluate"):
        genuine, impostor = score_sets(rows, space.orientation)
        grid = matcher.midpoint_grid(genuine, impostor)
        rate, t_star = matcher.eer(genuine, impostor, grid)
        roc = matcher.roc_curve(genuine, impostor, grid)
        fmr_t = matcher.fmr(impostor, t_star)
        fnmr_t = matcher.fnmr(genuine, t_star)
        scaled = matcher.gallery_scaled_rates(fmr_t, fnmr_t, len(ids))
        system.calibrate(genuine.values, impostor.values)
        self_verify = np.mean([system.verify(ids[c], s.x).accept for c, s in enumerate(split.enroll)])
        hits = [
            system.identify_op(p.x).identifier == ids[c] for c, group in enumerate(split.probes) for p in group
        ]

    with _stage("write"):
        out.mkdir(parents=True, exist_ok=True)
        roc_path, scores_path = out / "roc.csv", out / "scores.csv"
        model_path, gallery_path = out / "model.bmnn", out / "gallery.bmdb"
        matcher.write_roc_csv(roc, roc_path)
        write_scores(rows, scores_path)
        save_model(net, model_path)
        template_store.save(system.gallery, gallery_path)
        system.transcript.write(out / "transcript.log")
        report = ExperimentReport(
            eer=rate,
            threshold=t_star,
            fmr_at_threshold=fmr_t,
            fnmr_at_threshold=fnmr_t,
            gallery_size=len(ids),
            fmr_n=scaled.fmr_n,
            fnmr_n=scaled.fnmr_n,
            scaled_valid=scaled.valid,
            genuine_count=len(genuine),
            impostor_count=len(impostor),
            self_verify_rate=float(self_verify),
            identify_hit_rate=float(np.mean(hits)),
            roc_path=str(roc_path),
            scores_path=str(scores_path),
            model_path=str(model_path),
            model_digest=digest,
            gallery_path=str(gallery_path),
            seeds={
                "seed": cfg.seed,
                "seed.data": seeds.data,
                "seed.weights": seeds.weights,
                "seed.ids": seeds.ids,
                "seed.impostors": seeds.impostors,
            },
            config=cfg.echo(),
        )
        write_report(report, out / "report.txt")

    logger.info("eer %.4f at threshold %r over %d genuine / %d impostor scores", rate, t_star, len(genuine), len(impostor))
    return report
