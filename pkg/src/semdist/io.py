"""Bit-exact serialization for masks, scenes, annotations, and sem-dist maps.

Formats:
  * run-length masks: column-major scan, counts alternate background/
    foreground runs and always start with a (possibly zero-length)
    background run, matching the familiar detection-dataset convention
  * scene JSON: width/height, instance list, per-pixel stacks either dense
    (row-major list of id lists) or sparse ({"pixel_index": [ids]})
  * annotation JSON: per-image instance records with RLE masks
  * SDM binary: magic "SDM1", little-endian u32 width/height/channels, then
    channel-planar row-major float32 values
  * PGM (P5) / PPM (P6) for grayscale masks and renders

Readers are strict: unknown JSON fields, wrong types, and inconsistent
counts raise structured errors naming the offending JSON path.
"""

from __future__ import annotations

import json
import re
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .types import (
    BinaryMask,
    InstanceAnnotation,
    InstanceRecord,
    LayerStackScene,
    SemDistError,
    SemDistMap,
)

__all__ = [
    "SDM_MAGIC",
    "RleError",
    "SchemaError",
    "SdmFormatError",
    "ImageFormatError",
    "CocoaImportError",
    "RleMask",
    "rle_encode",
    "rle_decode",
    "scene_to_dict",
    "scene_from_dict",
    "write_scene",
    "read_scene",
    "annotations_to_dict",
    "annotations_from_dict",
    "write_annotations",
    "read_annotations",
    "semdist_to_bytes",
    "semdist_from_bytes",
    "write_semdist",
    "read_semdist",
    "write_pgm",
    "read_pgm",
    "write_ppm",
    "read_ppm",
    "rasterize_polygon",
    "CocoaImage",
    "CocoaImport",
    "import_cocoa",
]

PathLike = Union[str, Path]


class RleError(SemDistError):
    """A run-length encoding is malformed or inconsistent with its size."""


class SchemaError(SemDistError):
    """A JSON document violates its schema; path names the offending node."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class SdmFormatError(SemDistError):
    """An SDM binary payload is malformed."""


class ImageFormatError(SemDistError):
    """A PGM/PPM payload is malformed."""


class CocoaImportError(SemDistError):
    """A COCOA-style document cannot be imported; path names the offender."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


# ---------------------------------------------------------------------------
# run-length masks


@dataclass(frozen=True)
class RleMask:
    """Column-major run-length mask: counts of alternating 0/1 runs.

    The first count is the length of the leading background run and may be
    zero when the scan starts inside the mask.
    """

    width: int
    height: int
    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise RleError(f"mask must be at least 1x1, got {self.width}x{self.height}")
        counts = tuple(self.counts)
        for value in counts:
            if isinstance(value, bool) or not isinstance(value, int):
                raise RleError(f"run counts must be integers, got {value!r}")
            if value < 0:
                raise RleError(f"run counts must be non-negative, got {value}")
        object.__setattr__(self, "counts", counts)


def rle_encode(mask: BinaryMask) -> RleMask:
    """Encode a mask by scanning columns top to bottom, left to right."""
    flat = mask.bits.ravel(order="F")
    changes = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    boundaries = np.concatenate(([0], changes, [flat.size]))
    runs = np.diff(boundaries).tolist()
    if flat[0]:
        runs.insert(0, 0)
    return RleMask(mask.width, mask.height, tuple(int(r) for r in runs))


def rle_decode(rle: RleMask) -> BinaryMask:
    """Decode back to a mask; the counts must sum to width * height."""
    total = sum(rle.counts)
    if total != rle.width * rle.height:
        raise RleError(
            f"run counts sum to {total}, expected {rle.width * rle.height} "
            f"for a {rle.width}x{rle.height} mask"
        )
    values = np.zeros(len(rle.counts), dtype=bool)
    values[1::2] = True
    flat = np.repeat(values, np.array(rle.counts, dtype=np.int64))
    return BinaryMask(flat.reshape((rle.height, rle.width), order="F"))


# ---------------------------------------------------------------------------
# schema helpers


def _require_object(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(path, f"expected an object, got {type(value).__name__}")
    return value

def _require_list(value, path: str) -> list:
    if not isinstance(value, list):
        raise SchemaError(path, f"expected an array, got {type(value).__name__}")
    return value


def _require_int(value, path: str, minimum: Optional[int] = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise SchemaError(path, f"expected an integer >= {minimum}, got {value}")
    return value


def _require_real(value, path: str, lo: float, hi: float) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(path, f"expected a number, got {value!r}")
    value = float(value)
    if not (lo <= value <= hi):
        raise SchemaError(path, f"expected a number in [{lo}, {hi}], got {value}")
    return value


def _reject_unknown(obj: dict, allowed: Sequence[str], path: str) -> None:
    for key in obj:
        if key not in allowed:
            raise SchemaError(f"{path}.{key}", "unknown field")


def _get_required(obj: dict, key: str, path: str):
    if key not in obj:
        raise SchemaError(f"{path}.{key}", "missing required field")
    return obj[key]


# ---------------------------------------------------------------------------
# scene JSON


def scene_to_dict(scene: LayerStackScene, stacks: str = "sparse") -> dict:
    """Scene as a JSON-ready dict; stacks is either "sparse" or "dense"."""
    if stacks not in ("sparse", "dense"):
        raise ValueError(f'stacks must be "sparse" or "dense", got {stacks!r}')
    instances = [
        {"id": record.id, "category": record.category} for record in scene.instances
    ]
    arr = scene.stacks
    cells: Union[dict, list]
    if stacks == "dense":
        cells = [
            [int(v) for v in arr[:, y, x] if v != 0]
            for y in range(scene.height)
            for x in range(scene.width)
        ]
    else:
        cells = {}
        occupied = np.argwhere(arr.any(axis=0)) if arr.size else []
        for y, x in occupied:
            column = arr[:, y, x]
            cells[str(int(y) * scene.width + int(x))] = [
                int(v) for v in column[column != 0]
            ]
    return {
        "width": scene.width,
        "height": scene.height,
        "instances": instances,
        "stacks": cells,
    }


def _parse_instances(raw, path: str) -> tuple[InstanceRecord, ...]:
    records = []
    seen = set()
    for idx, item in enumerate(_require_list(raw, path)):
        item_path = f"{path}[{idx}]"
        obj = _require_object(item, item_path)
        _reject_unknown(obj, ("id", "category"), item_path)
        instance_id = _require_int(_get_required(obj, "id", item_path), f"{item_path}.id", 1)
        if instance_id in seen:
            raise SchemaError(f"{item_path}.id", f"duplicate instance id {instance_id}")
        seen.add(instance_id)
        category = obj.get("category")
        if category is not None and not isinstance(category, str):
            raise SchemaError(f"{item_path}.category", f"expected a string or null, got {category!r}")
        records.append(InstanceRecord(instance_id, category))
    return tuple(records)


def _parse_stack_cell(raw, path: str, known: set[int]) -> list[int]:
    entries = _require_list(raw, path)
    cell = []
    for pos, value in enumerate(entries):
        entry_path = f"{path}[{pos}]"
        instance_id = _require_int(value, entry_path, 1)
        if instance_id not in known:
            raise SchemaError(entry_path, f"id {instance_id} missing from the instance list")
        if instance_id in cell:
            raise SchemaError(entry_path, f"id {instance_id} repeated within one pixel stack")
        cell.append(instance_id)
    return cell


def scene_from_dict(doc) -> LayerStackScene:
    """Parse and validate a scene document; raises SchemaError on any defect."""
    root = _require_object(doc, "$")
    _reject_unknown(root, ("width", "height", "instances", "stacks"), "$")
    width = _require_int(_get_required(root, "width", "$"), "$.width", 1)
    height = _require_int(_get_required(root, "height", "$"), "$.height", 1)
    records = _parse_instances(_get_required(root, "instances", "$"), "$.instances")
    known = {record.id for record in records}

    raw_stacks = _get_required(root, "stacks", "$")
    cells: dict[int, list[int]] = {}
    if isinstance(raw_stacks, list):
        if len(raw_stacks) != width * height:
            raise SchemaError(
                "$.stacks",
                f"dense stacks need {width * height} entries, got {len(raw_stacks)}",
            )
        for index, raw_cell in enumerate(raw_stacks):
            cell = _parse_stack_cell(raw_cell, f"$.stacks[{index}]", known)
            if cell:
                cells[index] = cell
    elif isinstance(raw_stacks, dict):
        for key, raw_cell in raw_stacks.items():
            key_path = f'$.stacks["{key}"]'
            if not isinstance(key, str) or not re.fullmatch(r"0|[1-9][0-9]*", key):
                raise SchemaError(key_path, "sparse keys must be decimal pixel indices")
            index = int(key)
            if index >= width * height:
                raise SchemaError(
                    key_path, f"pixel index {index} outside a {width}x{height} grid"
                )
            cell = _parse_stack_cell(raw_cell, key_path, known)
            if not cell:
                raise SchemaError(key_path, "sparse stack cells must not be empty")
            cells[index] = cell
    else:
        raise SchemaError("$.stacks", "expected an array (dense) or object (sparse)")

    depth = max((len(cell) for cell in cells.values()), default=0)
    stacks = np.zeros((depth, height, width), dtype=np.int32)
    for index, cell in cells.items():
        y, x = divmod(index, width)
        stacks[: len(cell), y, x] = cell
    return LayerStackScene(width, height, records, stacks)


def write_scene(scene: LayerStackScene, path: PathLike, stacks: str = "sparse") -> None:
    Path(path).write_text(_dump_json(scene_to_dict(scene, stacks)), encoding="utf-8")


def read_scene(path: PathLike) -> LayerStackScene:
    return scene_from_dict(_load_json(path))


def _dump_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _load_json(path: PathLike):
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"not valid JSON: {exc}") from exc


# ---------------------------------------------------------------------------
# annotation JSON


def annotations_to_dict(
    width: int, height: int, annotations: Sequence[InstanceAnnotation]
) -> dict:
    items = []
    for ann in annotations:
        items.append(
            {
                "id": ann.id,
                "category": ann.category,
                "score": ann.score,
                "occlusion_rate": ann.occlusion_rate,
                "amodal": list(rle_encode(ann.amodal).counts),
                "visible": list(rle_encode(ann.visible).counts),
            }
        )
    return {"width": width, "height": height, "annotations": items}


def _parse_rle_field(raw, path: str, width: int, height: int) -> BinaryMask:
    entries = _require_list(raw, path)
    counts = []
    for pos, value in enumerate(entries):
        counts.append(_require_int(value, f"{path}[{pos}]", 0))
    try:
        return rle_decode(RleMask(width, height, tuple(counts)))
    except RleError as exc:
        raise SchemaError(path, str(exc)) from exc


def annotations_from_dict(doc) -> tuple[int, int, list[InstanceAnnotation]]:
    root = _require_object(doc, "$")
    _reject_unknown(root, ("width", "height", "annotations"), "$")
    width = _require_int(_get_required(root, "width", "$"), "$.width", 1)
    height = _require_int(_get_required(root, "height", "$"), "$.height", 1)
    annotations = []
    seen = set()
    for idx, item in enumerate(_require_list(_get_required(root, "annotations", "$"), "$.annotations")):
        path = f"$.annotations[{idx}]"
        obj = _require_object(item, path)
        _reject_unknown(
            obj, ("id", "category", "score", "occlusion_rate", "amodal", "visible"), path
        )
        instance_id = _require_int(_get_required(obj, "id", path), f"{path}.id", 1)
        if instance_id in seen:
            raise SchemaError(f"{path}.id", f"duplicate instance id {instance_id}")
        seen.add(instance_id)
        category = obj.get("category")
        if category is not None and not isinstance(category, str):
            raise SchemaError(f"{path}.category", f"expected a string or null, got {category!r}")
        score = _require_real(_get_required(obj, "score", path), f"{path}.score", 0.0, 1.0)
        rate = _require_real(
            _get_required(obj, "occlusion_rate", path), f"{path}.occlusion_rate", 0.0, 1.0
        )
        amodal = _parse_rle_field(_get_required(obj, "amodal", path), f"{path}.amodal", width, height)
        visible = _parse_rle_field(_get_required(obj, "visible", path), f"{path}.visible", width, height)
        try:
            annotations.append(
                InstanceAnnotation(
                    id=instance_id,
                    amodal=amodal,
                    visible=visible,
                    occlusion_rate=rate,
                    score=score,
                    category=category,
                )
            )
        except (ValueError, SemDistError) as exc:
            raise SchemaError(path, str(exc)) from exc
    return width, height, annotations


def write_annotations(
    width: int, height: int, annotations: Sequence[InstanceAnnotation], path: PathLike
) -> None:
    Path(path).write_text(
        _dump_json(annotations_to_dict(width, height, annotations)), encoding="utf-8"
    )


def read_annotations(path: PathLike) -> tuple[int, int, list[InstanceAnnotation]]:
    return annotations_from_dict(_load_json(path))


# ---------------------------------------------------------------------------
# SDM binary maps

SDM_MAGIC = b"SDM1"
_SDM_HEADER = struct.Struct("<4sIII")


def semdist_to_bytes(semdist: SemDistMap) -> bytes:
    header = _SDM_HEADER.pack(SDM_MAGIC, semdist.width, semdist.height, 1)
    return header + semdist.values.astype("<f4").tobytes(order="C")


def semdist_from_bytes(data: bytes) -> SemDistMap:
    if len(data) < _SDM_HEADER.size:
        raise SdmFormatError(
            f"truncated header: got {len(data)} bytes, need {_SDM_HEADER.size}"
        )
    magic, width, height, channels = _SDM_HEADER.unpack_from(data)
    if magic != SDM_MAGIC:
        raise SdmFormatError(f"bad magic {magic!r}, expected {SDM_MAGIC!r}")
    if width < 1 or height < 1 or channels < 1:
        raise SdmFormatError(
            f"dimensions must be positive, got {width}x{height}x{channels}"
        )
    if channels != 1:
        raise SdmFormatError(f"unsupported channel count {channels}, expected 1")
    expected = _SDM_HEADER.size + 4 * width * height * channels
    if len(data) != expected:
        raise SdmFormatError(f"payload is {len(data)} bytes, expected {expected}")
    values = np.frombuffer(data, dtype="<f4", offset=_SDM_HEADER.size).astype(np.float32)
    try:
        return SemDistMap(values.reshape((height, width)))
    except ValueError as exc:
        raise SdmFormatError(f"invalid map values: {exc}") from exc


def write_semdist(semdist: SemDistMap, path: PathLike) -> None:
    Path(path).write_bytes(semdist_to_bytes(semdist))


def read_semdist(path: PathLike) -> SemDistMap:
    return semdist_from_bytes(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# netpbm images


def write_pgm(gray: np.ndarray, path: PathLike) -> None:
    """Write a P5 grayscale image from a uint8 (height, width) array."""
    arr = np.asarray(gray)
    if arr.ndim != 2 or arr.dtype != np.uint8:
        raise ValueError(f"PGM payload must be a 2-D uint8 array, got {arr.dtype} {arr.shape}")
    header = f"P5\n{arr.shape[1]} {arr.shape[0]}\n255\n".encode("ascii")
    Path(path).write_bytes(header + arr.tobytes(order="C"))


def write_ppm(rgb: np.ndarray, path: PathLike) -> None:
    """Write a P6 color image from a uint8 (height, width, 3) array."""
    arr = np.asarray(rgb)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
        raise ValueError(f"PPM payload must be (h, w, 3) uint8, got {arr.dtype} {arr.shape}")
    header = f"P6\n{arr.shape[1]} {arr.shape[0]}\n255\n".encode("ascii")
    Path(path).write_bytes(header + arr.tobytes(order="C"))


def _read_netpbm(path: PathLike, magic: bytes, planes: int) -> np.ndarray:
    data = Path(path).read_bytes()
    matched = re.match(
        rb"^" + re.escape(magic) + rb"\s+(\d+)\s+(\d+)\s+(\d+)\s", data
    )
    if matched is None:
        raise ImageFormatError(f"malformed {magic.decode()} header")
    width, height, maxval = (int(g) for g in matched.groups())
    if maxval != 255:
        raise ImageFormatError(f"unsupported max value {maxval}, expected 255")
    payload = data[matched.end():]
    expected = width * height * planes
    if len(payload) != expected:
        raise ImageFormatError(f"payload is {len(payload)} bytes, expected {expected}")
    arr = np.frombuffer(payload, dtype=np.uint8)
    shape = (height, width) if planes == 1 else (height, width, planes)
    return arr.reshape(shape).copy()


def read_pgm(path: PathLike) -> np.ndarray:
    return _read_netpbm(path, b"P5", 1)


def read_ppm(path: PathLike) -> np.ndarray:
    return _read_netpbm(path, b"P6", 3)


# ---------------------------------------------------------------------------
# COCOA-style import


def rasterize_polygon(coords: Sequence[float], width: int, height: int) -> BinaryMask:
    """Even-odd fill of a flat [x0, y0, x1, y1, ...] ring over pixel centers."""
    pts = np.asarray(coords, dtype=np.float64).reshape(-1, 2)
    xs = np.arange(width, dtype=np.float64) + 0.5
    ys = np.arange(height, dtype=np.float64) + 0.5
    inside = np.zeros((height, width), dtype=bool)
    ax, ay = pts[:, 0], pts[:, 1]
    bx, by = np.roll(ax, -1), np.roll(ay, -1)
    for edge in range(pts.shape[0]):
        # half-open span in y gives each vertex to exactly one of its edges
        crosses = (ay[edge] <= ys) != (by[edge] <= ys)
        if not crosses.any():
            continue
        t = (ys[crosses] - ay[edge]) / (by[edge] - ay[edge])
        x_at = ax[edge] + t * (bx[edge] - ax[edge])
        inside[crosses] ^= xs[None, :] < x_at[:, None]
    return BinaryMask(inside)


@dataclass(frozen=True)
class CocoaImage:
    """Imported annotations of one image; region ids are 1-based positions."""

    image_id: int
    file_name: Optional[str]
    width: int
    height: int
    annotations: tuple[InstanceAnnotation, ...]
    order_pairs: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class CocoaImport:
    """Import outcome: per-image annotation lists plus a tally of the
    regions and fields that were skipped or ignored."""

    images: tuple[CocoaImage, ...]
    warning_count: int


_KNOWN_IMAGE_KEYS = (
    "id", "width", "height", "file_name", "license", "coco_url", "date_captured",
    "flickr_url",
)
_KNOWN_ANNOTATION_KEYS = ("image_id", "regions", "depth_constraint", "size", "id")
_KNOWN_REGION_KEYS = (
    "segmentation", "visible_mask", "invisible_mask", "name", "order", "isStuff",
    "occlude_rate", "area", "id",
)


class _WarningTally:
    def __init__(self):
        self.count = 0

    def add(self, n: int = 1):
        self.count += n


def _decode_region_mask(raw, path: str, width: int, height: int, tally) -> Optional[BinaryMask]:
    """Polygon list or uncompressed RLE dict -> mask; None (plus a warning)
    when the geometry is unsupported."""
    if isinstance(raw, list):
        if raw and isinstance(raw[0], list):
            rings = raw
        else:
            rings = [raw]
        combined = np.zeros((height, width), dtype=bool)
        for ring in rings:
            if (
                not isinstance(ring, list)
                or len(ring) < 6
                or len(ring) % 2 != 0
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in ring)
            ):
                tally.add()
                return None
            combined ^= rasterize_polygon(ring, width, height).bits
        return BinaryMask(combined)
    if isinstance(raw, dict):
        size = raw.get("size")
        counts = raw.get("counts")
        if (
            not isinstance(size, list)
            or len(size) != 2
            or size != [height, width]
            or not isinstance(counts, list)
            or not all(isinstance(v, int) and not isinstance(v, bool) for v in counts)
        ):
            tally.add()  # compressed or inconsistent RLE is not supported
            return None
        try:
            return rle_decode(RleMask(width, height, tuple(counts)))
        except RleError:
            tally.add()
            return None
    raise CocoaImportError(path, f"expected a polygon array or RLE object, got {type(raw).__name__}")


def _parse_depth_constraint(raw, path: str, tally) -> tuple[tuple[int, int], ...]:
    if raw is None:
        return ()
    if not isinstance(raw, str):
        raise CocoaImportError(path, f"expected a string, got {type(raw).__name__}")
    pairs = []
    for token in raw.split(","):
        token = token.strip()
        if not token:
            continue
        matched = re.fullmatch(r"(\d+)-(\d+)", token)
        if matched is None:
            tally.add()
            continue
        pairs.append((int(matched.group(1)), int(matched.group(2))))
    return tuple(pairs)


def import_cocoa(document) -> CocoaImport:
    """Import a COCOA-style amodal annotation document.

    Regions become InstanceAnnotation records with ids equal to their 1-based
    position in the regions list; occlusion_rate is recomputed from the
    decoded masks rather than trusted. Depth-order pairs from
    depth_constraint strings are preserved verbatim as (front, behind) region
    ids. Unsupported geometry and unknown fields are skipped and counted.
    """
    tally = _WarningTally()
    root = document
    if not isinstance(root, dict):
        raise CocoaImportError("$", f"expected an object, got {type(root).__name__}")

    images_raw = root.get("images")
    if not isinstance(images_raw, list):
        raise CocoaImportError("$.images", "missing or not an array")
    image_meta: dict[int, tuple[Optional[str], int, int]] = {}
    image_order: list[int] = []
    for idx, item in enumerate(images_raw):
        path = f"$.images[{idx}]"
        if not isinstance(item, dict):
            raise CocoaImportError(path, "expected an object")
        for key in item:
            if key not in _KNOWN_IMAGE_KEYS:
                tally.add()
        for key in ("id", "width", "height"):
            if not isinstance(item.get(key), int) or isinstance(item.get(key), bool):
                raise CocoaImportError(f"{path}.{key}", "missing or not an integer")
        image_id = item["id"]
        if image_id in image_meta:
            raise CocoaImportError(f"{path}.id", f"duplicate image id {image_id}")
        file_name = item.get("file_name")
        if file_name is not None and not isinstance(file_name, str):
            raise CocoaImportError(f"{path}.file_name", "expected a string")
        if item["width"] < 1 or item["height"] < 1:
            raise CocoaImportError(path, "image dimensions must be positive")
        image_meta[image_id] = (file_name, item["width"], item["height"])
        image_order.append(image_id)

    annotations_raw = root.get("annotations", [])
    if not isinstance(annotations_raw, list):
        raise CocoaImportError("$.annotations", "expected an array")
    for key in root:
        if key not in ("images", "annotations", "info", "licenses", "categories"):
            tally.add()

    per_image: dict[int, tuple[tuple[InstanceAnnotation, ...], tuple[tuple[int, int], ...]]] = {}
    for idx, entry in enumerate(annotations_raw):
        path = f"$.annotations[{idx}]"
        if not isinstance(entry, dict):
            raise CocoaImportError(path, "expected an object")
        for key in entry:
            if key not in _KNOWN_ANNOTATION_KEYS:
                tally.add()
        image_id = entry.get("image_id")
        if not isinstance(image_id, int) or isinstance(image_id, bool):
            raise CocoaImportError(f"{path}.image_id", "missing or not an integer")
        if image_id not in image_meta:
            raise CocoaImportError(f"{path}.image_id", f"unknown image id {image_id}")
        if image_id in per_image:
            raise CocoaImportError(f"{path}.image_id", f"image {image_id} annotated twice")
        _, width, height = image_meta[image_id]

        regions_raw = entry.get("regions")
        if not isinstance(regions_raw, list):
            raise CocoaImportError(f"{path}.regions", "missing or not an array")
        annotations = []
        for r_idx, region in enumerate(regions_raw):
            r_path = f"{path}.regions[{r_idx}]"
            if not isinstance(region, dict):
                raise CocoaImportError(r_path, "expected an object")
            for key in region:
                if key not in _KNOWN_REGION_KEYS:
                    tally.add()
            if "segmentation" not in region:
                tally.add()
                continue
            amodal = _decode_region_mask(
                region["segmentation"], f"{r_path}.segmentation", width, height, tally
            )
            if amodal is None or amodal.area() == 0:
                if amodal is not None:
                    tally.add()  # empty amodal region carries no instance
                continue
            visible: Optional[BinaryMask] = None
            if "visible_mask" in region and region["visible_mask"] is not None:
                visible = _decode_region_mask(
                    region["visible_mask"], f"{r_path}.visible_mask", width, height, tally
                )
            if visible is None and "invisible_mask" in region and region["invisible_mask"] is not None:
                invisible = _decode_region_mask(
                    region["invisible_mask"], f"{r_path}.invisible_mask", width, height, tally
                )
                if invisible is not None:
                    visible = BinaryMask(amodal.bits & ~invisible.bits)
            if visible is None:
                visible = amodal  # no occlusion data means fully visible
            else:
                visible = BinaryMask(visible.bits & amodal.bits)
            name = region.get("name")
            if name is not None and not isinstance(name, str):
                raise CocoaImportError(f"{r_path}.name", "expected a string")
            category = name
            if category is None and region.get("isStuff"):
                category = "stuff"
            annotations.append(
                InstanceAnnotation.from_masks(
                    r_idx + 1, amodal, visible, score=1.0, category=category
                )
            )
        pairs = _parse_depth_constraint(
            entry.get("depth_constraint"), f"{path}.depth_constraint", tally
        )
        per_image[image_id] = (tuple(annotations), pairs)

    images = []
    for image_id in image_order:
        file_name, width, height = image_meta[image_id]
        annotations, pairs = per_image.get(image_id, ((), ()))
        images.append(
            CocoaImage(
                image_id=image_id,
                file_name=file_name,
                width=width,
                height=height,
                annotations=annotations,
                order_pairs=pairs,
            )
        )
    return CocoaImport(images=tuple(images), warning_count=tally.count)
