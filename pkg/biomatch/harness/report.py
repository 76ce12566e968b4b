"""
Experiment artifacts: the flat ``key: value`` report and the scores CSV, plus
the consistency check that recomputes a report from its persisted scores.
"""

from pathlib import Path
from typing import Dict, List, NamedTuple, Tuple, Union

from pydantic import BaseModel, Field

from biomatch import matcher
from biomatch.matcher import ScoreLabel, ScoreSet
from biomatch.spaces import Orientation, SpaceDescriptor, SpaceKind

SCORES_HEADER = "identity,probe,template,label,value"


class ScoreRow(NamedTuple):
    identity: int
    probe: int
    template: int
    label: ScoreLabel
    value: float


class ExperimentReport(BaseModel):
    eer: float = Field(ge=0.0, le=1.0)
    threshold: float
    fmr_at_threshold: float = Field(ge=0.0, le=1.0)
    fnmr_at_threshold: float = Field(ge=0.0, le=1.0)
    gallery_size: int
    fmr_n: float = Field(ge=0.0, le=1.0)
    fnmr_n: float = Field(ge=0.0, le=1.0)
    scaled_valid: bool
    genuine_count: int
    impostor_count: int
    self_verify_rate: float = Field(ge=0.0, le=1.0)
    identify_hit_rate: float = Field(ge=0.0, le=1.0)
    roc_path: str
    scores_path: str
    model_path: str
    model_digest: str
    gallery_path: str
    seeds: Dict[str, int]
    config: Dict[str, str]

    def lines(self) -> List[str]:
        out = []
        for key, value in self.model_dump(exclude={"seeds", "config"}).items():
            out.append(f"{key}: {_format(value)}")
        out.extend(f"{key}: {value}" for key, value in self.seeds.items())
        out.extend(f"config.{key}: {value}" for key, value in sorted(self.config.items()))
        return out


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_report(report: ExperimentReport, destination: Union[str, Path]) -> None:
    Path(destination).write_text("\n".join(report.lines()) + "\n")


def read_report(source: Union[str, Path]) -> Dict[str, str]:
    entries: Dict[str, str] = {}
    for line in Path(source).read_text().splitlines():
        if not line.strip():
            continue
        key, sep, value = line.partition(": ")
        if not sep:
            raise ValueError(f"malformed report line {line!r}")
        entries[key] = value
    return entries


def write_scores(rows: List[ScoreRow], destination: Union[str, Path]) -> None:
    lines = [SCORES_HEADER]
    lines.extend(f"{r.identity},{r.probe},{r.template},{r.label.value},{r.value:.17g}" for r in rows)
    Path(destination).write_text("\n".join(lines) + "\n")


def read_scores(source: Union[str, Path]) -> List[ScoreRow]:
    lines = Path(source).read_text().splitlines()
    if not lines or lines[0].strip() != SCORES_HEADER:
        raise ValueError(f"{source} is not a scores file (expected header {SCORES_HEADER!r})")
    rows = []
    for line in lines[1:]:
        if line.strip():
            identity, probe, template, label, value = line.split(",")
            rows.append(ScoreRow(int(identity), int(probe), int(template), ScoreLabel(label), float(value)))
    return rows


def score_sets(rows: List[ScoreRow], orientation: Orientation) -> Tuple[ScoreSet, ScoreSet]:
    genuine = [r.value for r in rows if r.label == ScoreLabel.GENUINE]
    impostor = [r.value for r in rows if r.label == ScoreLabel.IMPOSTOR]
    return (
        ScoreSet.of(genuine, ScoreLabel.GENUINE, orientation),
        ScoreSet.of(impostor, ScoreLabel.IMPOSTOR, orientation),
    )


class ReportCheck(NamedTuple):
    consistent: bool
    mismatches: Dict[str, Tuple[str, str]]


def recompute_report(report_path: Union[str, Path]) -> ReportCheck:
    """
    Recompute the rates of a written report from its scores file and compare
    them with what the report states.
    """
    report_path = Path(report_path)
    entries = read_report(report_path)
    scores_path = Path(entries["scores_path"])
    if not scores_path.is_absolute() and not scores_path.exists():
        scores_path = report_path.parent / scores_path.name
    kind = SpaceKind(entries.get("config.space.kind", SpaceKind.EUCLIDEAN.value))
    orientation = SpaceDescriptor(kind=kind, dimension=1).orientation
    genuine, impostor = score_sets(read_scores(scores_path), orientation)

    threshold = float(entries["threshold"])
    rate, t_star = matcher.eer(genuine, impostor, matcher.midpoint_grid(genuine, impostor))
    recomputed = {
        "eer": repr(rate),
        "threshold": repr(t_star),
        "fmr_at_threshold": repr(matcher.fmr(impostor, threshold)),
        "fnmr_at_threshold": repr(matcher.fnmr(genuine, threshold)),
        "genuine_count": str(len(genuine)),
        "impostor_count": str(len(impostor)),
    }
    mismatches = {
        key: (entries.get(key, ""), value) for key, value in recomputed.items() if entries.get(key) != value
    }
    return ReportCheck(not mismatches, mismatches)
