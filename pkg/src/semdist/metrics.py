"""Evaluation: mask IoU, greedy matching, AP/AR, occlusion strata, depth order.

AP and AR average over the ten IoU thresholds 0.50, 0.55, ..., 0.95. The
thresholds are built from integers so boundary cases like an IoU of exactly
0.60 compare reproducibly.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .codec import (
    DEFAULT_CONFIDENCE,
    DEFAULT_THRESHOLD,
    ConfidencePolicy,
    OrderVerdict,
    encode_semdist,
    object_order,
)
from .types import (
    BinaryMask,
    DimensionMismatchError,
    EvalReport,
    ImageDiagnostics,
    InstanceAnnotation,
    LayerStackScene,
    SemDistError,
    SemDistMap,
    amodal_mask_of,
)

__all__ = [
    "IOU_THRESHOLDS",
    "HEAVY_OCCLUSION_CUT",
    "EmptyGroundTruthError",
    "NoOverlappingPairsError",
    "MatchResult",
    "iou",
    "iou_matrix",
    "match",
    "average_precision",
    "average_recall",
    "stratified_ar",
    "order_accuracy",
    "assign_maps_to_gt",
    "evaluate",
    "report_to_dict",
]

IOU_THRESHOLDS = tuple(t / 100 for t in range(50, 100, 5))

HEAVY_OCCLUSION_CUT = 0.25
"""Occlusion rate above which an instance counts as heavily occluded."""


class EmptyGroundTruthError(SemDistError):
    """Recall-based metrics are undefined without ground-truth instances."""


class NoOverlappingPairsError(SemDistError):
    """Depth-order accuracy is undefined without overlapping instance pairs."""


def iou(a: BinaryMask, b: BinaryMask) -> float:
    """Intersection over union of two masks; 0 when both are empty."""
    a.require_same_shape(b)
    intersection = int((a.bits & b.bits).sum())
    union = int((a.bits | b.bits).sum())
    if union == 0:
        return 0.0
    return intersection / union


def iou_matrix(
    gt: Sequence[InstanceAnnotation], pred: Sequence[InstanceAnnotation]
) -> np.ndarray:
    """Pairwise amodal-mask IoU, shape (len(gt), len(pred))."""
    if not gt or not pred:
        return np.zeros((len(gt), len(pred)), dtype=np.float64)
    shape = gt[0].amodal.bits.shape
    for ann in list(gt) + list(pred):
        if ann.amodal.bits.shape != shape:
            raise DimensionMismatchError(
                "all masks in one image must share dimensions, "
                f"got {ann.amodal.bits.shape} vs {shape}"
            )
    g = np.stack([ann.amodal.bits.ravel() for ann in gt]).astype(np.int64)
    p = np.stack([ann.amodal.bits.ravel() for ann in pred]).astype(np.int64)
    inter = g @ p.T
    union = g.sum(axis=1)[:, None] + p.sum(axis=1)[None, :] - inter
    out = np.zeros_like(inter, dtype=np.float64)
    np.divide(inter, union, out=out, where=union > 0)
    return out


@dataclass(frozen=True)
class MatchResult:
    """Outcome of greedy matching for one image at one IoU threshold."""

    pairs: tuple[tuple[int, int, float], ...]  # (gt_id, pred_id, iou)
    unmatched_gt: tuple[int, ...]
    unmatched_pred: tuple[int, ...]


def match(
    gt: Sequence[InstanceAnnotation],
    pred: Sequence[InstanceAnnotation],
    iou_threshold: float,
    *,
    class_aware: bool = False,
) -> MatchResult:
    """Greedy one-to-one matching on amodal masks.

    Predictions are visited by descending score (ties to the lower id); each
    claims the still unmatched ground-truth instance with the highest IoU at
    or above the threshold (ties to the lower gt id). With class_aware=True a
    pair additionally needs equal categories whenever both sides carry one.
    """
    if not (0.0 < iou_threshold <= 1.0):
        raise ValueError(f"IoU threshold must lie in (0, 1], got {iou_threshold}")
    gt_order = sorted(gt, key=lambda ann: ann.id)
    pred_order = sorted(pred, key=lambda ann: (-ann.score, ann.id))
    matrix = iou_matrix(gt_order, pred_order)

    taken = [False] * len(gt_order)
    pairs: list[tuple[int, int, float]] = []
    unmatched_pred: list[int] = []
    for p_idx, p_ann in enumerate(pred_order):
        best_idx = -1
        best_iou = 0.0
        for g_idx, g_ann in enumerate(gt_order):
            if taken[g_idx]:
                continue
            if (
                class_aware
                and p_ann.category is not None
                and g_ann.category is not None
                and p_ann.category != g_ann.category
            ):
                continue
            value = float(matrix[g_idx, p_idx])
            if value >= iou_threshold and value > best_iou:
                best_idx = g_idx
                best_iou = value
        if best_idx >= 0:
            taken[best_idx] = True
            pairs.append((gt_order[best_idx].id, p_ann.id, best_iou))
        else:
            unmatched_pred.append(p_ann.id)
    unmatched_gt = [ann.id for g_idx, ann in enumerate(gt_order) if not taken[g_idx]]
    return MatchResult(tuple(pairs), tuple(unmatched_gt), tuple(unmatched_pred))


def _total_gt(gt_images: Sequence[Sequence[InstanceAnnotation]]) -> int:
    return sum(len(image) for image in gt_images)


def _check_image_counts(gt_images, pred_images) -> None:
    if len(gt_images) != len(pred_images):
        raise ValueError(
            f"gt and prediction image counts differ: {len(gt_images)} vs {len(pred_images)}"
        )


def average_precision(
    gt_images: Sequence[Sequence[InstanceAnnotation]],
    pred_images: Sequence[Sequence[InstanceAnnotation]],
    *,
    class_aware: bool = False,
) -> float:
    """Mean over the IoU thresholds of the area under the pooled PR curve.

    Matching runs per image; all predictions are then pooled and sorted by
    descending score (ties broken by image position, then prediction id) and
    the PR curve is integrated with monotone-envelope step interpolation.
    """
    _check_image_counts(gt_images, pred_images)
    total_gt = _total_gt(gt_images)
    if total_gt == 0:
        raise EmptyGroundTruthError("average precision needs at least one gt instance")

    per_threshold = []
    for threshold in IOU_THRESHOLDS:
        rows = []  # (-score, image index, pred id, is true positive)
        for image_idx, (gt, pred) in enumerate(zip(gt_images, pred_images)):
            result = match(gt, pred, threshold, class_aware=class_aware)
            matched_pred = {pred_id for _, pred_id, _ in result.pairs}
            for ann in pred:
                rows.append((-ann.score, image_idx, ann.id, ann.id in matched_pred))
        if not rows:
            per_threshold.append(0.0)
            continue
        rows.sort()
        flags = np.array([row[3] for row in rows], dtype=bool)
        cum_tp = np.cumsum(flags)
        precision = cum_tp / np.arange(1, flags.size + 1)
        recall = cum_tp / total_gt
        envelope = np.maximum.accumulate(precision[::-1])[::-1]
        previous = np.concatenate(([0.0], recall[:-1]))
        per_threshold.append(float(np.sum((recall - previous) * envelope * flags)))
    return float(np.mean(per_threshold))


def _top_k(pred: Sequence[InstanceAnnotation], k: int) -> list[InstanceAnnotation]:
    return sorted(pred, key=lambda ann: (-ann.score, ann.id))[:k]


def average_recall(
    gt_images: Sequence[Sequence[InstanceAnnotation]],
    pred_images: Sequence[Sequence[InstanceAnnotation]],
    k: int,
    *,
    class_aware: bool = False,
) -> float:
    """Mean over the IoU thresholds of matched gt over total gt, keeping at
    most the k highest-scoring predictions per image."""
    _check_image_counts(gt_images, pred_images)
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    total_gt = _total_gt(gt_images)
    if total_gt == 0:
        raise EmptyGroundTruthError("average recall needs at least one gt instance")

    recalls = []
    for threshold in IOU_THRESHOLDS:
        matched = 0
        for gt, pred in zip(gt_images, pred_images):
            result = match(gt, _top_k(pred, k), threshold, class_aware=class_aware)
            matched += len(result.pairs)
        recalls.append(matched / total_gt)
    return float(np.mean(recalls))


def stratified_ar(
    gt_images: Sequence[Sequence[InstanceAnnotation]],
    pred_images: Sequence[Sequence[InstanceAnnotation]],
    k: int = 100,
    *,
    heavy_cut: float = HEAVY_OCCLUSION_CUT,
    class_aware: bool = False,
) -> tuple[Optional[float], Optional[float], Optional[float]]:
    """AR@k over three occlusion strata of the ground truth.

    Strata: occlusion_rate exactly 0, in (0, heavy_cut], and above heavy_cut.
    Predictions are never filtered. A stratum holding no gt instance anywhere
    reports None rather than a number.
    """
    _check_image_counts(gt_images, pred_images)

    def in_none(ann):
        return ann.occlusion_rate == 0.0

    def in_partial(ann):
        return 0.0 < ann.occlusion_rate <= heavy_cut

    def in_heavy(ann):
        return ann.occlusion_rate > heavy_cut

    out = []
    for keep in (in_none, in_partial, in_heavy):
        stratum = [[ann for ann in image if keep(ann)] for image in gt_images]
        if _total_gt(stratum) == 0:
            out.append(None)
        else:
            out.append(average_recall(stratum, pred_images, k, class_aware=class_aware))
    return tuple(out)


def _order_counts(
    scene_gt: LayerStackScene,
    pred_maps: Sequence[tuple[int, SemDistMap]],
    c: float,
    gt_confidence: float,
) -> tuple[int, int, int]:
    """(correct, evaluated, skipped ambiguous gt) over overlapping gt pairs."""
    policy = ConfidencePolicy(constant=gt_confidence)
    by_id = dict(pred_maps)
    ids = sorted(scene_gt.ids())
    gt_maps = {i: encode_semdist(scene_gt, i, policy) for i in ids}
    amodal = {i: amodal_mask_of(scene_gt, i).bits for i in ids}

    correct = 0
    evaluated = 0
    skipped = 0
    for id_a, id_b in combinations(ids, 2):
        if not (amodal[id_a] & amodal[id_b]).any():
            continue
        gt_verdict = object_order(gt_maps[id_a], gt_maps[id_b], c)
        if gt_verdict in (OrderVerdict.AMBIGUOUS, OrderVerdict.DISJOINT):
            skipped += 1  # no defined gt order for this pair
            continue
        evaluated += 1
        map_a = by_id.get(id_a)
        map_b = by_id.get(id_b)
        if map_a is None or map_b is None:
            continue  # missing prediction counts as incorrect
        if object_order(map_a, map_b, c) == gt_verdict:
            correct += 1
    return correct, evaluated, skipped


def order_accuracy(
    scene_gt: LayerStackScene,
    pred_maps: Sequence[tuple[int, SemDistMap]],
    c: float = DEFAULT_THRESHOLD,
    *,
    gt_confidence: float = DEFAULT_CONFIDENCE,
) -> float:
    """Fraction of overlapping gt pairs whose predicted object-level depth
    order matches the ground truth.

    pred_maps pairs each predicted map with the gt id it was assigned to.
    Ambiguous or disjoint predictions on an ordered gt pair count as
    incorrect; gt pairs whose own order is ambiguous are excluded.
    """
    if not (0.0 < c < gt_confidence):
        raise ValueError(
            f"threshold c must satisfy 0 < c < gt confidence, got c={c}, "
            f"confidence={gt_confidence}"
        )
    correct, evaluated, _ = _order_counts(scene_gt, pred_maps, c, gt_confidence)
    if evaluated == 0:
        raise NoOverlappingPairsError(
            "no overlapping gt pair with a defined depth order in this scene"
        )
    return correct / evaluated


def assign_maps_to_gt(
    gt: Sequence[InstanceAnnotation],
    pred: Sequence[InstanceAnnotation],
    pred_maps: dict[int, SemDistMap],
) -> list[tuple[int, SemDistMap]]:
    """Pair predicted maps with gt ids by best amodal overlap.

    Greedy one-to-one assignment over descending IoU (any positive overlap
    qualifies); ties break to lower gt id then lower prediction id.
    """
    matrix = iou_matrix(gt, pred)
    candidates = []
    for g_idx, g_ann in enumerate(gt):
        for p_idx, p_ann in enumerate(pred):
            value = float(matrix[g_idx, p_idx])
            if value > 0.0 and p_ann.id in pred_maps:
                candidates.append((-value, g_ann.id, p_ann.id))
    candidates.sort()
    used_gt: set[int] = set()
    used_pred: set[int] = set()
    assigned: list[tuple[int, SemDistMap]] = []
    for neg_iou, gt_id, pred_id in candidates:
        if gt_id in used_gt or pred_id in used_pred:
            continue
        used_gt.add(gt_id)
        used_pred.add(pred_id)
        assigned.append((gt_id, pred_maps[pred_id]))
    return assigned


def evaluate(
    gt_images: Sequence[Sequence[InstanceAnnotation]],
    pred_images: Sequence[Sequence[InstanceAnnotation]],
    *,
    image_names: Optional[Sequence[str]] = None,
    order_items: Optional[Sequence[tuple[LayerStackScene, Sequence[tuple[int, SemDistMap]]]]] = None,
    c: float = DEFAULT_THRESHOLD,
    gt_confidence: float = DEFAULT_CONFIDENCE,
    k_small: int = 10,
    k_large: int = 100,
    heavy_cut: float = HEAVY_OCCLUSION_CUT,
    class_aware: bool = False,
) -> EvalReport:
    """Assemble the full evaluation report over a corpus of images.

    order_items optionally supplies (gt scene, assigned predicted maps) pairs
    for depth-order accuracy, pooled over all scenes; without them (or with
    no evaluable pair) order_accuracy is None.
    """
    _check_image_counts(gt_images, pred_images)
    if image_names is None:
        image_names = [f"{idx:04d}" for idx in range(len(gt_images))]
    elif len(image_names) != len(gt_images):
        raise ValueError("image_names length must match the image count")

    ap = average_precision(gt_images, pred_images, class_aware=class_aware)
    ar_small = average_recall(gt_images, pred_images, k_small, class_aware=class_aware)
    ar_large = average_recall(gt_images, pred_images, k_large, class_aware=class_aware)
    ar_none, ar_partial, ar_heavy = stratified_ar(
        gt_images, pred_images, k_large, heavy_cut=heavy_cut, class_aware=class_aware
    )

    order_value: Optional[float] = None
    if order_items is not None:
        correct = 0
        evaluated = 0
        for scene, maps in order_items:
            got, total, _ = _order_counts(scene, maps, c, gt_confidence)
            correct += got
            evaluated += total
        if evaluated > 0:
            order_value = correct / evaluated

    diagnostics = []
    for name, gt, pred in sorted(
        zip(image_names, gt_images, pred_images), key=lambda row: row[0]
    ):
        result = match(gt, pred, 0.5, class_aware=class_aware)
        diagnostics.append(
            ImageDiagnostics(
                image=name,
                gt_count=len(gt),
                pred_count=len(pred),
                matched_at_50=len(result.pairs),
            )
        )

    return EvalReport(
        ap=ap,
        ar10=ar_small,
        ar100=ar_large,
        ar_none=ar_none,
        ar_partial=ar_partial,
        ar_heavy=ar_heavy,
        order_accuracy=order_value,
        per_image=tuple(diagnostics),
    )


def report_to_dict(report: EvalReport) -> dict:
    """EvalReport as a JSON-ready dict with fixed field names."""
    return {
        "ap": report.ap,
        "ar10": report.ar10,
        "ar100": report.ar100,
        "ar_none": report.ar_none,
        "ar_partial": report.ar_partial,
        "ar_heavy": report.ar_heavy,
        "order_accuracy": report.order_accuracy,
        "per_image": [
            {
                "image": diag.image,
                "gt_count": diag.gt_count,
                "pred_count": diag.pred_count,
                "matched_at_50": diag.matched_at_50,
            }
            for diag in report.per_image
        ],
        "meta": {
            "iou_thresholds": list(IOU_THRESHOLDS),
            "ar_averages_over_iou_thresholds": True,
            "heavy_occlusion_cut": HEAVY_OCCLUSION_CUT,
        },
    }
