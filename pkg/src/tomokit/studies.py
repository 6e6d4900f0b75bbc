"""Canonical data model for patients, exams, volumes and labels.

All value types are frozen dataclasses (safe to share between threads).
Geometry is stored in the post-resize 518 x 518 frame; annotations given in
raw pixels must be rescaled at ingest with the same transform applied to
the image.

A dataset lives in a single JSON manifest (UTF-8, lower_snake_case field
names) listing exams, their per-view volumes, labels, outcomes and box
annotations.  :func:`load_manifest` / :func:`save_manifest` round-trip it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Optional

FRAME_SIZE = 518  # all box geometry lives in this square frame


class ViewKind(str, Enum):
    """The four standard screening views."""

    LCC = "LCC"
    RCC = "RCC"
    LMLO = "LMLO"
    RMLO = "RMLO"


VIEW_ORDER = (ViewKind.LCC, ViewKind.RCC, ViewKind.LMLO, ViewKind.RMLO)


class DensityCategory(str, Enum):
    """Four-category breast-composition scale, ordered A < B < C < D."""

    A = "A"
    B = "B"
    C = "C"
    D = "D"

    @property
    def rank(self) -> int:
        return "ABCD".index(self.value)

    @classmethod
    def from_rank(cls, rank: int) -> "DensityCategory":
        return cls("ABCD"[rank])

    @property
    def dense(self) -> bool:
        """Binary collapse: {A, B} -> non-dense, {C, D} -> dense."""
        return self.rank >= 2


@dataclass(frozen=True)
class VolumeRef:
    """One reconstructed view volume; (patient_id, exam_id, view) is unique."""

    patient_id: str
    exam_id: str
    view: ViewKind
    n_slices: int
    acquisition_date: str = ""  # ISO-8601 date

    def key(self) -> str:
        return f"{self.patient_id}/{self.exam_id}/{self.view.value}"


@dataclass(frozen=True)
class Demographics:
    age_years: Optional[float] = None
    race: Optional[str] = None


@dataclass(frozen=True)
class Outcome:
    """Cancer outcome for risk modelling (None followup means unknown)."""

    event: bool
    event_year: Optional[int] = None  # 1..5 when event
    followup_years: float = 0.0


@dataclass(frozen=True)
class Exam:
    """A full imaging study comprising up to four view volumes."""

    exam_id: str
    patient_id: str
    views: Mapping[ViewKind, VolumeRef] = field(default_factory=dict)
    demographics: Optional[Demographics] = None
    density: Optional[DensityCategory] = None
    outcome: Optional[Outcome] = None
    split: str = "train"  # train | val | test

    def is_complete(self) -> bool:
        return all(v in self.views for v in ViewKind)


@dataclass(frozen=True)
class BoxAnnotation:
    """Lesion box on one slice, in the 518 x 518 frame."""

    volume: VolumeRef
    slice_index: int
    x: float
    y: float
    w: float
    h: float
    malignancy: Optional[str] = None  # "benign" | "cancer"

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)


@dataclass(frozen=True)
class Violation:
    """One invariant breach found by validation; data, not an exception."""

    code: str
    detail: str


def validate_exam(exam: Exam, annotations: Iterable[BoxAnnotation] = ()) -> list[Violation]:
    """Check exam and annotation invariants; empty list means all hold."""
    out: list[Violation] = []
    for view in ViewKind:
        if view not in exam.views:
            out.append(Violation("missing_view", f"{exam.exam_id}: missing {view.value}"))
    for view, vol in exam.views.items():
        if vol.view != view:
            out.append(Violation("view_mismatch", f"{vol.key()}: keyed as {view.value}"))
        if vol.exam_id != exam.exam_id or vol.patient_id != exam.patient_id:
            out.append(Violation("id_mismatch", f"{vol.key()}: ids disagree with exam"))
        if vol.n_slices < 1:
            out.append(Violation("empty_volume", f"{vol.key()}: n_slices={vol.n_slices}"))
    if exam.outcome is not None:
        oc = exam.outcome
        if oc.event and not (oc.event_year is not None and 1 <= oc.event_year <= 5):
            out.append(Violation("invalid_event_year", f"{exam.exam_id}: {oc.event_year}"))
        if oc.followup_years < 0:
            out.append(Violation("negative_followup", f"{exam.exam_id}"))
    for box in annotations:
        where = f"{box.volume.key()}[{box.slice_index}]"
        if box.w <= 0 or box.h <= 0:
            out.append(Violation("degenerate_box", where))
        if not (0 <= box.x and box.x + box.w <= FRAME_SIZE
                and 0 <= box.y and box.y + box.h <= FRAME_SIZE):
            out.append(Violation("box_out_of_frame", where))
        if not (0 <= box.slice_index < box.volume.n_slices):
            out.append(Violation("slice_out_of_range", where))
    return out


# --- manifest (de)serialization ----------------------------------------------


def exam_to_dict(exam: Exam) -> dict:
    d: dict = {
        "exam_id": exam.exam_id,
        "patient_id": exam.patient_id,
        "split": exam.split,
        "views": [
            {
                "view": v.view.value,
                "n_slices": v.n_slices,
                "acquisition_date": v.acquisition_date,
            }
            for v in (exam.views[k] for k in VIEW_ORDER if k in exam.views)
        ],
    }
    if exam.demographics is not None:
        d["demographics"] = {
            "age_years": exam.demographics.age_years,
            "race": exam.demographics.race,
        }
    if exam.density is not None:
        d["density"] = exam.density.value
    if exam.outcome is not None:
        d["outcome"] = {
            "event": exam.outcome.event,
            "event_year": exam.outcome.event_year,
            "followup_years": exam.outcome.followup_years,
        }
    return d


def exam_from_dict(d: Mapping) -> Exam:
    views = {}
    for v in d.get("views", []):
        view = ViewKind(v["view"])
        views[view] = VolumeRef(
            patient_id=d["patient_id"],
            exam_id=d["exam_id"],
            view=view,
            n_slices=int(v["n_slices"]),
            acquisition_date=v.get("acquisition_date", ""),
        )
    demo = None
    if "demographics" in d:
        demo = Demographics(
            age_years=d["demographics"].get("age_years"),
            race=d["demographics"].get("race"),
        )
    outcome = None
    if "outcome" in d:
        o = d["outcome"]
        outcome = Outcome(
            event=bool(o["event"]),
            event_year=o.get("event_year"),
            followup_years=float(o.get("followup_years", 0.0)),
        )
    density = DensityCategory(d["density"]) if d.get("density") else None
    return Exam(
        exam_id=d["exam_id"],
        patient_id=d["patient_id"],
        views=views,
        demographics=demo,
        density=density,
        outcome=outcome,
        split=d.get("split", "train"),
    )


def annotation_to_dict(box: BoxAnnotation) -> dict:
    return {
        "patient_id": box.volume.patient_id,
        "exam_id": box.volume.exam_id,
        "view": box.volume.view.value,
        "n_slices": box.volume.n_slices,
        "acquisition_date": box.volume.acquisition_date,
        "slice_index": box.slice_index,
        "x": box.x,
        "y": box.y,
        "w": box.w,
        "h": box.h,
        "malignancy": box.malignancy,
    }


def annotation_from_dict(d: Mapping) -> BoxAnnotation:
    vol = VolumeRef(
        patient_id=d["patient_id"],
        exam_id=d["exam_id"],
        view=ViewKind(d["view"]),
        n_slices=int(d.get("n_slices", 1)),
        acquisition_date=d.get("acquisition_date", ""),
    )
    return BoxAnnotation(
        volume=vol,
        slice_index=int(d["slice_index"]),
        x=float(d["x"]),
        y=float(d["y"]),
        w=float(d["w"]),
        h=float(d["h"]),
        malignancy=d.get("malignancy"),
    )


@dataclass
class Dataset:
    """In-memory view of one manifest."""

    exams: list[Exam] = field(default_factory=list)
    annotations: list[BoxAnnotation] = field(default_factory=list)

    def by_split(self, split: str) -> list[Exam]:
        return [e for e in self.exams if e.split == split]

    def validate(self) -> list[Violation]:
        out: list[Violation] = []
        seen: set[str] = set()
        by_exam: dict[str, list[BoxAnnotation]] = {}
        for box in self.annotations:
            by_exam.setdefault(box.volume.exam_id, []).append(box)
        for exam in self.exams:
            out.extend(validate_exam(exam, by_exam.get(exam.exam_id, ())))
            for vol in exam.views.values():
                key = vol.key()
                if key in seen:
                    out.append(Violation("duplicate_volume", key))
                seen.add(key)
        return out


def save_manifest(dataset: Dataset, path: str | Path) -> None:
    doc = {
        "exams": [exam_to_dict(e) for e in dataset.exams],
        "annotations": [annotation_to_dict(a) for a in dataset.annotations],
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True), encoding="utf-8")


def load_manifest(path: str | Path) -> Dataset:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return Dataset(
        exams=[exam_from_dict(d) for d in doc.get("exams", [])],
        annotations=[annotation_from_dict(d) for d in doc.get("annotations", [])],
    )
