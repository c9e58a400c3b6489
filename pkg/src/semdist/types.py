"""Core value types for layered occlusion scenes and their invariants.

Everything here is an immutable value: numpy payloads are copied on
construction and marked read-only, so instances are safe to share across
threads and to use as fixture data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "LEVEL_ABSENT",
    "SemDistError",
    "UnknownInstanceError",
    "DimensionMismatchError",
    "BinaryMask",
    "InstanceRecord",
    "LayerStackScene",
    "SceneViolation",
    "SemDistMap",
    "LayeringMap",
    "InstanceAnnotation",
    "ImageDiagnostics",
    "EvalReport",
    "validate_scene",
    "amodal_mask_of",
    "visible_mask_of",
]

LEVEL_ABSENT = -1
"""Sentinel used in integer level grids for pixels where an instance is absent."""


class SemDistError(Exception):
    """Base class for every error raised by this package."""


class UnknownInstanceError(SemDistError):
    """An instance id was requested that the scene does not contain."""


class DimensionMismatchError(SemDistError):
    """Two grids that must share dimensions do not."""


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Row-major boolean grid. Origin is top-left; x grows rightward, y downward."""

    bits: np.ndarray

    def __post_init__(self) -> None:
        bits = np.array(self.bits, dtype=bool)
        if bits.ndim != 2:
            raise ValueError(f"mask grid must be 2-D, got {bits.ndim}-D")
        if bits.shape[0] < 1 or bits.shape[1] < 1:
            raise ValueError(f"mask must be at least 1x1, got shape {bits.shape}")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def zeros(cls, width: int, height: int) -> "BinaryMask":
        return cls(np.zeros((height, width), dtype=bool))

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def area(self) -> int:
        return int(self.bits.sum())

    def is_subset_of(self, other: "BinaryMask") -> bool:
        self.require_same_shape(other)
        return not bool((self.bits & ~other.bits).any())

    def require_same_shape(self, other: "BinaryMask") -> None:
        if self.bits.shape != other.bits.shape:
            raise DimensionMismatchError(
                f"mask dimensions differ: {self.width}x{self.height} "
                f"vs {other.width}x{other.height}"
            )

    def __eq__(self, other: object):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.bits.shape == other.bits.shape and bool(
            np.array_equal(self.bits, other.bits)
        )

    __hash__ = None


@dataclass(frozen=True)
class InstanceRecord:
    """Identity of one scene instance; ids are opaque positive integers."""

    id: int
    category: Optional[str] = None

    def __post_init__(self) -> None:
        if isinstance(self.id, bool) or not isinstance(self.id, int) or self.id < 1:
            raise ValueError(f"instance id must be a positive integer, got {self.id!r}")
        if self.category is not None and not isinstance(self.category, str):
            raise ValueError(f"category must be a string or None, got {self.category!r}")


@dataclass(frozen=True, eq=False)
class LayerStackScene:
    """Per-pixel front-to-back stacks of instance ids.

    ``stacks`` has shape (depth, height, width); the front-most entry sits at
    depth index 0 and 0 marks an empty slot. Trailing all-empty depth planes
    are trimmed on construction so equal scenes hold equal arrays.
    """

    width: int
    height: int
    instances: tuple[InstanceRecord, ...]
    stacks: np.ndarray

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"scene must be at least 1x1, got {self.width}x{self.height}")
        instances = tuple(self.instances)
        for record in instances:
            if not isinstance(record, InstanceRecord):
                raise ValueError(f"instances must be InstanceRecord, got {record!r}")
        stacks = np.array(self.stacks, dtype=np.int32)
        if stacks.ndim != 3 or stacks.shape[1:] != (self.height, self.width):
            raise ValueError(
                f"stacks must have shape (depth, {self.height}, {self.width}), "
                f"got {stacks.shape}"
            )
        occupied = np.flatnonzero(stacks.any(axis=(1, 2)))
        depth = int(occupied[-1]) + 1 if occupied.size else 0
        stacks = np.ascontiguousarray(stacks[:depth])
        stacks.setflags(write=False)
        object.__setattr__(self, "instances", instances)
        object.__setattr__(self, "stacks", stacks)

    @classmethod
    def from_layers(
        cls,
        width: int,
        height: int,
        layers: Sequence[tuple[InstanceRecord, BinaryMask]],
    ) -> "LayerStackScene":
        """Build a scene from (record, amodal mask) pairs ordered front to back.

        Each pixel's stack becomes the ids of the masks covering it, in the
        given order. Every instance appears once, so stacks cannot hold
        duplicates by construction.
        """
        records = []
        seen: set[int] = set()
        for record, mask in layers:
            if record.id in seen:
                raise ValueError(f"duplicate instance id {record.id}")
            seen.add(record.id)
            if mask.width != width or mask.height != height:
                raise DimensionMismatchError(
                    f"mask for instance {record.id} is {mask.width}x{mask.height}, "
                    f"scene is {width}x{height}"
                )
            records.append(record)
        cover = np.zeros((height, width), dtype=np.int32)
        for _, mask in layers:
            cover += mask.bits
        depth = int(cover.max()) if records else 0
        stacks = np.zeros((depth, height, width), dtype=np.int32)
        fill = np.zeros((height, width), dtype=np.intp)
        for record, mask in layers:
            ys, xs = np.nonzero(mask.bits)
            stacks[fill[ys, xs], ys, xs] = record.id
            fill[ys, xs] += 1
        return cls(width, height, tuple(records), stacks)

    def ids(self) -> tuple[int, ...]:
        return tuple(record.id for record in self.instances)

    def has_instance(self, instance_id: int) -> bool:
        return any(record.id == instance_id for record in self.instances)

    def record_of(self, instance_id: int) -> InstanceRecord:
        for record in self.instances:
            if record.id == instance_id:
                return record
        raise UnknownInstanceError(f"instance {instance_id} is not part of the scene")

    def stack_at(self, x: int, y: int) -> tuple[int, ...]:
        """Front-to-back instance ids at one pixel (empty slots dropped)."""
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise IndexError(f"pixel ({x}, {y}) outside {self.width}x{self.height} scene")
        column = self.stacks[:, y, x]
        return tuple(int(v) for v in column[column != 0])

    def depth_counts(self) -> np.ndarray:
        """Per-pixel stack lengths as an (height, width) int32 grid."""
        return (self.stacks != 0).sum(axis=0, dtype=np.int32)

    def max_depth(self) -> int:
        return int(self.depth_counts().max())

    def __eq__(self, other: object):
        if not isinstance(other, LayerStackScene):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.instances == other.instances
            and self.stacks.shape == other.stacks.shape
            and bool(np.array_equal(self.stacks, other.stacks))
        )

    __hash__ = None


@dataclass(frozen=True)
class SceneViolation:
    """One violated scene invariant, with a witness pixel where one applies."""

    kind: str
    message: str
    pixel: Optional[tuple[int, int]] = None
    instance_id: Optional[int] = None


def validate_scene(scene: LayerStackScene) -> list[SceneViolation]:
    """Check LayerStackScene invariants. Violations are data, not exceptions.

    Detects: duplicate entries in the instance list, ids in stacks that the
    instance list lacks, non-positive ids in stacks, one id occurring twice in
    a single pixel stack, and empty slots sitting above occupied ones.
    """
    violations: list[SceneViolation] = []

    seen: set[int] = set()
    for record in scene.instances:
        if record.id in seen:
            violations.append(
                SceneViolation(
                    kind="duplicate_instance",
                    message=f"instance id {record.id} listed more than once",
                    instance_id=record.id,
                )
            )
        seen.add(record.id)

    stacks = scene.stacks
    if stacks.size == 0:
        return violations

    known = set(scene.ids())
    for uid in np.unique(stacks):
        uid = int(uid)
        if uid == 0:
            continue
        plane, y, x = (int(v) for v in np.argwhere(stacks == uid)[0])
        if uid < 0:
            violations.append(
                SceneViolation(
                    kind="invalid_id",
                    message=f"stack at ({x}, {y}) holds non-positive id {uid}",
                    pixel=(x, y),
                    instance_id=uid,
                )
            )
        elif uid not in known:
            violations.append(
                SceneViolation(
                    kind="unknown_id",
                    message=f"stack at ({x}, {y}) references id {uid} "
                    "missing from the instance list",
                    pixel=(x, y),
                    instance_id=uid,
                )
            )

    # duplicate id inside one pixel stack: sort the depth axis and compare neighbours
    if stacks.shape[0] > 1:
        ordered = np.sort(stacks, axis=0)
        dup = (ordered[1:] == ordered[:-1]) & (ordered[1:] != 0)
        reported: set[int] = set()
        for y, x in np.argwhere(dup.any(axis=0)):
            column = stacks[:, y, x]
            values, counts = np.unique(column[column != 0], return_counts=True)
            for uid in values[counts > 1]:
                uid = int(uid)
                if uid in reported:
                    continue
                reported.add(uid)
                violations.append(
                    SceneViolation(
                        kind="duplicate_id_in_stack",
                        message=f"id {uid} occurs twice in the stack at ({int(x)}, {int(y)})",
                        pixel=(int(x), int(y)),
                        instance_id=uid,
                    )
                )

    if stacks.shape[0] > 1:
        gaps = (stacks[:-1] == 0) & (stacks[1:] != 0)
        if gaps.any():
            _, y, x = (int(v) for v in np.argwhere(gaps)[0])
            violations.append(
                SceneViolation(
                    kind="gap_in_stack",
                    message=f"stack at ({x}, {y}) has an occupied slot below an empty one",
                    pixel=(x, y),
                )
            )

    return violations


def _require_instance(scene: LayerStackScene, instance_id: int) -> None:
    if not scene.has_instance(instance_id):
        raise UnknownInstanceError(f"instance {instance_id} is not part of the scene")


def amodal_mask_of(scene: LayerStackScene, instance_id: int) -> BinaryMask:
    """Pixels whose stack contains the instance at any depth."""
    _require_instance(scene, instance_id)
    return BinaryMask((scene.stacks == instance_id).any(axis=0))


def visible_mask_of(scene: LayerStackScene, instance_id: int) -> BinaryMask:
    """Pixels where the instance is the front-most stack entry."""
    _require_instance(scene, instance_id)
    if scene.stacks.shape[0] == 0:
        return BinaryMask.zeros(scene.width, scene.height)
    return BinaryMask(scene.stacks[0] == instance_id)


@dataclass(frozen=True, eq=False)
class SemDistMap:
    """Single-channel float32 grid encoding one instance.

    The fractional part of a value is an occurrence confidence in (0, 1); the
    non-positive integer part is minus the number of objects occluding the
    pixel. Pixels outside the instance's amodal support hold exactly 0, so
    every stored value is strictly below 1.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float32)
        if values.ndim != 2:
            raise ValueError(f"map grid must be 2-D, got {values.ndim}-D")
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError(f"map must be at least 1x1, got shape {values.shape}")
        if not np.isfinite(values).all():
            raise ValueError("map values must be finite")
        if not (values < 1.0).all():
            raise ValueError("map values must be strictly below 1")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    def __eq__(self, other: object):
        if not isinstance(other, SemDistMap):
            return NotImplemented
        return self.values.shape == other.values.shape and bool(
            np.array_equal(self.values, other.values)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class LayeringMap:
    """Stack of per-level occupancy grids with values in [0, 1].

    Channel k describes visibility level k. Ground-truth targets are exactly
    0/1; predicted maps may carry fractional confidences.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float32)
        if values.ndim != 3:
            raise ValueError(f"layering grid must be 3-D, got {values.ndim}-D")
        if values.shape[0] < 1:
            raise ValueError("layering map needs at least one channel")
        if values.shape[1] < 1 or values.shape[2] < 1:
            raise ValueError(f"layering map must be at least 1x1, got shape {values.shape}")
        if not np.isfinite(values).all():
            raise ValueError("layering values must be finite")
        if ((values < 0.0) | (values > 1.0)).any():
            raise ValueError("layering values must lie in [0, 1]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def layer_count(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[2]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    def channel(self, k: int) -> np.ndarray:
        if not (0 <= k < self.layer_count):
            raise IndexError(f"channel {k} outside 0..{self.layer_count - 1}")
        return self.values[k]

    def is_binary(self) -> bool:
        return bool(((self.values == 0.0) | (self.values == 1.0)).all())

    def __eq__(self, other: object):
        if not isinstance(other, LayeringMap):
            return NotImplemented
        return self.values.shape == other.values.shape and bool(
            np.array_equal(self.values, other.values)
        )

    __hash__ = None


_RATE_TOLERANCE = 1e-9  # stored occlusion_rate must agree with the mask areas


@dataclass(frozen=True, eq=False)
class InstanceAnnotation:
    """I/O-facing record of one instance: masks, occlusion rate, score, label."""

    id: int
    amodal: BinaryMask
    visible: BinaryMask
    occlusion_rate: float
    score: float = 1.0
    category: Optional[str] = None

    def __post_init__(self) -> None:
        if isinstance(self.id, bool) or not isinstance(self.id, int) or self.id < 1:
            raise ValueError(f"instance id must be a positive integer, got {self.id!r}")
        self.amodal.require_same_shape(self.visible)
        if not self.visible.is_subset_of(self.amodal):
            raise ValueError(f"visible mask of instance {self.id} leaves its amodal mask")
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score must lie in [0, 1], got {self.score}")
        if not (0.0 <= self.occlusion_rate <= 1.0):
            raise ValueError(f"occlusion_rate must lie in [0, 1], got {self.occlusion_rate}")
        area = self.amodal.area()
        if area > 0:
            expected = 1.0 - self.visible.area() / area
            if abs(expected - self.occlusion_rate) > _RATE_TOLERANCE:
                raise ValueError(
                    f"occlusion_rate {self.occlusion_rate} disagrees with mask areas "
                    f"(expected {expected})"
                )

    @classmethod
    def from_masks(
        cls,
        instance_id: int,
        amodal: BinaryMask,
        visible: BinaryMask,
        score: float = 1.0,
        category: Optional[str] = None,
    ) -> "InstanceAnnotation":
        """Build an annotation, deriving occlusion_rate from the two masks."""
        if not isinstance(amodal, BinaryMask):
            amodal = BinaryMask(amodal)
        if not isinstance(visible, BinaryMask):
            visible = BinaryMask(visible)
        area = amodal.area()
        if area == 0:
            raise ValueError(f"instance {instance_id} has an empty amodal mask")
        rate = 1.0 - visible.area() / area
        return cls(
            id=instance_id,
            amodal=amodal,
            visible=visible,
            occlusion_rate=rate,
            score=score,
            category=category,
        )

    def __eq__(self, other: object):
        if not isinstance(other, InstanceAnnotation):
            return NotImplemented
        return (
            self.id == other.id
            and self.amodal == other.amodal
            and self.visible == other.visible
            and self.occlusion_rate == other.occlusion_rate
            and self.score == other.score
            and self.category == other.category
        )

    __hash__ = None


@dataclass(frozen=True)
class ImageDiagnostics:
    """Per-image evaluation summary carried inside an EvalReport."""

    image: str
    gt_count: int
    pred_count: int
    matched_at_50: int


def _check_unit_interval(name: str, value: Optional[float]) -> None:
    if value is None:
        return
    if not (0.0 <= value <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class EvalReport:
    """Scalar evaluation metrics plus per-image diagnostics.

    Stratified recall fields are None when the corresponding occlusion
    stratum holds no ground-truth instances; order_accuracy is None when no
    depth-order pairs were evaluable.
    """

    ap: float
    ar10: float
    ar100: float
    ar_none: Optional[float]
    ar_partial: Optional[float]
    ar_heavy: Optional[float]
    order_accuracy: Optional[float]
    per_image: tuple[ImageDiagnostics, ...] = ()

    def __post_init__(self) -> None:
        _check_unit_interval("ap", self.ap)
        _check_unit_interval("ar10", self.ar10)
        _check_unit_interval("ar100", self.ar100)
        _check_unit_interval("ar_none", self.ar_none)
        _check_unit_interval("ar_partial", self.ar_partial)
        _check_unit_interval("ar_heavy", self.ar_heavy)
        _check_unit_interval("order_accuracy", self.order_accuracy)
        object.__setattr__(self, "per_image", tuple(self.per_image))
