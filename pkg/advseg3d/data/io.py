# **************************************************
# Copyright (c) 2025, advseg3d contributors
# **************************************************

import os
from dataclasses import dataclass, field

import numpy as np

from ..constants import CASE_ROLES, CLASS_NAMES, DEFAULT_INTENSITY_WINDOW, FORMAT_VERSION, ROLE_LABELED
from ..utils import dump_json, ensure_directory, load_json
from .volume import CtVolume, LabelMap


_META_FILENAME = "meta.json"
_VOLUME_FILENAME = "volume.f32"
_LABELS_FILENAME = "labels.u8"
_MANIFEST_FILENAME = "manifest.json"

_VOLUME_DTYPE = np.dtype("<f4")
_LABELS_DTYPE = np.dtype("u1")


@dataclass(frozen=True)
class Case:
    case_id: str
    volume: CtVolume
    labels: LabelMap | None
    role: str
    seed: int | None = None


@dataclass(frozen=True)
class CaseRecord:
    case_id: str
    role: str
    seed: int | None = None

    def __post_init__(self) -> None:
        assert self.role in CASE_ROLES, f"unexpected case role ({self.role})"


@dataclass(frozen=True)
class DatasetManifest:
    cases: tuple[CaseRecord, ...]
    seed: int | None = None
    class_names: tuple[str, ...] = CLASS_NAMES

    def get_case_ids(self, role: str | None = None) -> list[str]:
        return [case.case_id for case in self.cases if role is None or case.role == role]

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "class_names": list(self.class_names),
            "seed": self.seed,
            "cases": [{"case_id": i.case_id, "role": i.role, "seed": i.seed} for i in self.cases],
        }

    @staticmethod
    def from_dict(data: dict) -> "DatasetManifest":
        assert data["format_version"] == FORMAT_VERSION, f"unsupported manifest version ({data['format_version']})"

        return DatasetManifest(
            cases=tuple(CaseRecord(**case) for case in data["cases"]),
            seed=data["seed"],
            class_names=tuple(data["class_names"]),
        )


def save_case(
    root: str,
    case_id: str,
    volume: CtVolume,
    labels: LabelMap | None = None,
    role: str = ROLE_LABELED,
    seed: int | None = None,
    normalization_window: tuple[float, float] | None = DEFAULT_INTENSITY_WINDOW,
    class_names: tuple[str, ...] = CLASS_NAMES,
) -> str:
    """writes a case directory: raw little-endian float32 volume, uint8 labels and the JSON sidecar

    Args:
        root (str): dataset root
        case_id (str): case ID, used as the directory name
        volume (CtVolume): volume
        labels (LabelMap | None, optional): labels. Defaults to None.
        role (str, optional): case role. Defaults to ROLE_LABELED.
        seed (int | None, optional): generating seed, if any. Defaults to None.
        normalization_window (tuple[float, float] | None, optional): window used to normalize the volume,
            ignored for raw volumes. Defaults to DEFAULT_INTENSITY_WINDOW.
        class_names (tuple[str, ...], optional): class names. Defaults to CLASS_NAMES.

    Returns:
        str: case directory
    """

    assert role in CASE_ROLES, f"unexpected case role ({role})"
    if labels is not None:
        assert labels.shape == volume.shape, "labels and volume have different shapes"
        assert labels.num_classes == len(class_names), "class_names don't match the label classes"

    path = ensure_directory(os.path.join(root, case_id))

    volume.data.astype(_VOLUME_DTYPE).tofile(os.path.join(path, _VOLUME_FILENAME))
    if labels is not None:
        labels.classes.astype(_LABELS_DTYPE).tofile(os.path.join(path, _LABELS_FILENAME))

    meta = {
        "case_id": case_id,
        "class_names": list(class_names),
        "format_version": FORMAT_VERSION,
        "has_labels": labels is not None,
        "normalization_window": list(normalization_window) if volume.normalized else None,
        "normalized": volume.normalized,
        "role": role,
        "seed": seed,
        "shape": list(volume.shape),
        "spacing_mm": list(volume.spacing_mm),
    }
    dump_json(meta, os.path.join(path, _META_FILENAME))

    return path


def load_case(path: str) -> Case:
    meta = load_json(os.path.join(path, _META_FILENAME))
    assert meta["format_version"] == FORMAT_VERSION, f"unsupported case version ({meta['format_version']})"

    shape = tuple(meta["shape"])

    data = np.fromfile(os.path.join(path, _VOLUME_FILENAME), dtype=_VOLUME_DTYPE).reshape(shape)
    volume = CtVolume(data=data, spacing_mm=tuple(meta["spacing_mm"]), normalized=meta["normalized"])

    labels = None
    if meta["has_labels"]:
        classes = np.fromfile(os.path.join(path, _LABELS_FILENAME), dtype=_LABELS_DTYPE).reshape(shape)
        labels = LabelMap(classes=classes.astype(np.int64), num_classes=len(meta["class_names"]))

    return Case(case_id=meta["case_id"], volume=volume, labels=labels, role=meta["role"], seed=meta["seed"])


def write_manifest(root: str, manifest: DatasetManifest) -> str:
    path = os.path.join(ensure_directory(root), _MANIFEST_FILENAME)
    dump_json(manifest.to_dict(), path)
    return path


def read_manifest(root: str) -> DatasetManifest:
    return DatasetManifest.from_dict(load_json(os.path.join(root, _MANIFEST_FILENAME)))


@dataclass
class CaseDataset:
    """lazy view of a dataset directory, cases are loaded on first access and cached"""

    root: str
    manifest: DatasetManifest = None
    _cache: dict[str, Case] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if self.manifest is None:
            self.manifest = read_manifest(self.root)

    def get_case(self, case_id: str) -> Case:
        if case_id not in self._cache:
            assert case_id in self.manifest.get_case_ids(), f"case ({case_id}) is not in the manifest"
            self._cache[case_id] = load_case(os.path.join(self.root, case_id))

        return self._cache[case_id]

    def get_cases(self, case_ids: list[str]) -> list[Case]:
        return [self.get_case(case_id) for case_id in case_ids]

    def get_case_ids(self, role: str | None = None) -> list[str]:
        return self.manifest.get_case_ids(role)

    def __len__(self) -> int:
        return len(self.manifest.cases)


def load_dataset(root: str) -> CaseDataset:
    return CaseDataset(root=root)
