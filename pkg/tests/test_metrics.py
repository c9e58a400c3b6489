import numpy as np
import pytest

from semdist import (
    IOU_THRESHOLDS,
    BinaryMask,
    DimensionMismatchError,
    EmptyGroundTruthError,
    GenConfig,
    InstanceAnnotation,
    InstanceRecord,
    LayerStackScene,
    NoOverlappingPairsError,
    PerturbConfig,
    SemDistMap,
    amodal_mask_of,
    assign_maps_to_gt,
    average_precision,
    average_recall,
    encode_semdist,
    evaluate,
    generate,
    iou,
    iou_matrix,
    match,
    order_accuracy,
    perturb,
    report_to_dict,
    scene_annotations,
    stratified_ar,
)


def _strip_annotation(width: int, on_columns: range, row_count: int = 1, **kwargs):
    bits = np.zeros((row_count, width), dtype=bool)
    bits[:, list(on_columns)] = True
    mask = BinaryMask(bits)
    return InstanceAnnotation.from_masks(kwargs.pop("ann_id", 1), mask, mask, **kwargs)


class TestIou:
    def test_s0_masks_give_one_third(self, s0):
        value = iou(amodal_mask_of(s0, 1), amodal_mask_of(s0, 2))
        assert value == 1 / 3

    def test_both_empty_is_zero(self):
        assert iou(BinaryMask.zeros(3, 3), BinaryMask.zeros(3, 3)) == 0.0

    def test_identical_masks(self, s0):
        mask = amodal_mask_of(s0, 1)
        assert iou(mask, mask) == 1.0

    def test_matrix_agrees_with_scalar(self, s0):
        annotations = scene_annotations(s0)
        matrix = iou_matrix(annotations, annotations)
        for i, a in enumerate(annotations):
            for j, b in enumerate(annotations):
                assert matrix[i, j] == iou(a.amodal, b.amodal)

    def test_matrix_rejects_mixed_shapes(self, s0):
        small = InstanceAnnotation.from_masks(
            9, BinaryMask(np.ones((2, 2), bool)), BinaryMask(np.ones((2, 2), bool))
        )
        with pytest.raises(DimensionMismatchError):
            iou_matrix(scene_annotations(s0), [small])


class TestMatch:
    def test_thresholds_built_from_integers(self):
        assert IOU_THRESHOLDS == tuple(t / 100 for t in range(50, 100, 5))
        assert len(IOU_THRESHOLDS) == 10

    def test_greedy_visits_by_score(self):
        gt = [_strip_annotation(10, range(0, 10), ann_id=1)]
        strong = _strip_annotation(10, range(0, 6), ann_id=7, score=0.9)   # IoU 0.6
        better = _strip_annotation(10, range(0, 9), ann_id=8, score=0.8)   # IoU 0.9
        result = match(gt, [strong, better], 0.5)
        assert result.pairs == ((1, 7, 0.6),)
        assert result.unmatched_pred == (8,)

    def test_each_gt_claimed_once(self):
        gt = [_strip_annotation(10, range(0, 10), ann_id=1)]
        preds = [
            _strip_annotation(10, range(0, 10), ann_id=5, score=0.9),
            _strip_annotation(10, range(0, 10), ann_id=6, score=0.8),
        ]
        result = match(gt, preds, 0.5)
        assert len(result.pairs) == 1
        assert result.unmatched_pred == (6,)

    def test_score_tie_breaks_to_lower_id(self):
        gt = [_strip_annotation(10, range(0, 10), ann_id=1)]
        preds = [
            _strip_annotation(10, range(0, 10), ann_id=6, score=0.5),
            _strip_annotation(10, range(0, 10), ann_id=5, score=0.5),
        ]
        result = match(gt, preds, 0.5)
        assert result.pairs[0][1] == 5

    def test_class_aware_blocks_mismatched_categories(self):
        gt = [_strip_annotation(10, range(0, 10), ann_id=1, category="cat")]
        pred = [_strip_annotation(10, range(0, 10), ann_id=2, category="dog", score=0.9)]
        assert match(gt, pred, 0.5).pairs != ()
        assert match(gt, pred, 0.5, class_aware=True).pairs == ()
        # a missing category on either side never blocks a match
        pred_none = [_strip_annotation(10, range(0, 10), ann_id=2, score=0.9)]
        assert match(gt, pred_none, 0.5, class_aware=True).pairs != ()

    @pytest.mark.parametrize("bad", [0.0, -0.5, 1.01])
    def test_threshold_domain(self, bad):
        with pytest.raises(ValueError):
            match([], [], bad)


class TestAveragePrecision:
    def test_gt_vs_gt_is_exactly_one(self, corpus):
        images = [scene_annotations(scene) for scene in corpus[:10]]
        assert average_precision(images, images) == 1.0

    def test_iou_point_six_gives_exactly_point_three(self):
        # IoU of 3/5 clears thresholds 0.50, 0.55, 0.60 and no others, so the
        # threshold mean is exactly 3/10
        gt = [[_strip_annotation(5, range(0, 5), ann_id=1)]]
        pred = [[_strip_annotation(5, range(0, 3), ann_id=1, score=0.9)]]
        assert iou(gt[0][0].amodal, pred[0][0].amodal) == 0.6
        assert average_precision(gt, pred) == 0.3

    def test_score_rescaling_never_changes_ap(self, corpus):
        gt = [scene_annotations(scene) for scene in corpus[:6]]
        pred = [
            perturb(image, PerturbConfig(erode_radius=1, score_noise=0.3, seed=11))
            for image in gt
        ]
        rescaled = [
            [
                InstanceAnnotation(
                    id=ann.id,
                    amodal=ann.amodal,
                    visible=ann.visible,
                    occlusion_rate=ann.occlusion_rate,
                    score=ann.score * 0.5,
                    category=ann.category,
                )
                for ann in image
            ]
            for image in pred
        ]
        assert average_precision(gt, pred) == average_precision(gt, rescaled)

    def test_high_scoring_false_positive_lowers_ap(self, s0):
        gt = [scene_annotations(s0)]
        correct = [
            InstanceAnnotation(
                id=ann.id,
                amodal=ann.amodal,
                visible=ann.visible,
                occlusion_rate=ann.occlusion_rate,
                score=0.5,
                category=ann.category,
            )
            for ann in gt[0]
        ]
        noise = _strip_annotation(3, range(0, 1), row_count=3, ann_id=9, score=0.99)
        assert average_precision(gt, [correct]) == 1.0
        assert average_precision(gt, [correct + [noise]]) < 1.0

    def test_empty_gt_raises(self):
        with pytest.raises(EmptyGroundTruthError):
            average_precision([[]], [[]])

    def test_no_predictions_is_zero(self, s0):
        assert average_precision([scene_annotations(s0)], [[]]) == 0.0


class TestAverageRecall:
    def test_gt_vs_gt_is_exactly_one(self, corpus):
        images = [scene_annotations(scene) for scene in corpus[:10]]
        assert average_recall(images, images, 10) == 1.0
        assert average_recall(images, images, 100) == 1.0

    def test_monotone_in_k(self, corpus):
        gt = [scene_annotations(scene) for scene in corpus[:8]]
        pred = [
            perturb(image, PerturbConfig(erode_radius=1, score_noise=0.4, seed=3))
            for image in gt
        ]
        values = [average_recall(gt, pred, k) for k in (1, 2, 3, 6, 10)]
        assert all(a <= b for a, b in zip(values, values[1:]))

    def test_budget_keeps_top_scorers(self):
        gt = [[_strip_annotation(8, range(0, 8), ann_id=1)]]
        good = _strip_annotation(8, range(0, 8), ann_id=5, score=0.4)
        bad = _strip_annotation(8, range(0, 1), ann_id=6, score=0.9)
        assert average_recall(gt, [[good, bad]], 2) == 1.0
        # with a budget of one, the high-scoring poor mask crowds out the match
        assert average_recall(gt, [[good, bad]], 1) == 0.0

    def test_k_must_be_positive(self, s0):
        images = [scene_annotations(s0)]
        with pytest.raises(ValueError):
            average_recall(images, images, 0)

    def test_empty_gt_raises(self):
        with pytest.raises(EmptyGroundTruthError):
            average_recall([[]], [[]], 10)


def _rate_fixture():
    """One image: three gt instances with occlusion rates 0, 0.2, and 0.5."""
    gt = []
    for ann_id, x0, hidden in ((1, 0, 0), (2, 12, 2), (3, 24, 5)):
        amodal = np.zeros((1, 40), dtype=bool)
        amodal[:, x0 : x0 + 10] = True
        visible = amodal.copy()
        visible[:, x0 : x0 + hidden] = False
        gt.append(
            InstanceAnnotation.from_masks(ann_id, BinaryMask(amodal), BinaryMask(visible))
        )
    return gt


class TestStratifiedAr:
    def test_rates_route_to_strata(self):
        gt = [_rate_fixture()]
        # predict only the unoccluded and the heavily occluded instance
        pred = [[gt[0][0], gt[0][2]]]
        ar_none, ar_partial, ar_heavy = stratified_ar(gt, pred)
        assert ar_none == 1.0
        assert ar_partial == 0.0
        assert ar_heavy == 1.0

    def test_boundary_rate_counts_as_partial(self):
        amodal = np.zeros((1, 4), dtype=bool)
        amodal[:, :4] = True
        visible = amodal.copy()
        visible[:, 0] = False  # rate exactly 0.25
        ann = InstanceAnnotation.from_masks(1, BinaryMask(amodal), BinaryMask(visible))
        assert ann.occlusion_rate == 0.25
        ar_none, ar_partial, ar_heavy = stratified_ar([[ann]], [[ann]])
        assert ar_partial == 1.0
        assert ar_none is None and ar_heavy is None

    def test_empty_strata_report_none(self, s0):
        gt = [[ann for ann in scene_annotations(s0) if ann.occlusion_rate == 0.0]]
        ar_none, ar_partial, ar_heavy = stratified_ar(gt, gt)
        assert ar_none == 1.0
        assert ar_partial is None
        assert ar_heavy is None


class TestOrderAccuracy:
    def _gt_maps(self, scene):
        return [(r.id, encode_semdist(scene, r.id)) for r in scene.instances]

    def test_gt_maps_score_one(self, s0):
        assert order_accuracy(s0, self._gt_maps(s0)) == 1.0

    def test_missing_prediction_counts_incorrect(self, s0):
        partial = [pair for pair in self._gt_maps(s0) if pair[0] == 1]
        assert order_accuracy(s0, partial) == 0.0

    def test_ambiguous_prediction_counts_incorrect(self, s0):
        # predicted maps tie on the s0 overlap: one pixel votes each way and
        # the middle pixel falls outside the joint region
        front = np.float32(0.95)
        behind = np.float32(0.95) - np.float32(1.0)
        values_a = np.zeros((3, 3), dtype=np.float32)
        values_b = np.zeros((3, 3), dtype=np.float32)
        values_a[1, 0], values_b[1, 0] = front, behind
        values_a[1, 2], values_b[1, 2] = behind, front
        tied = [(1, SemDistMap(values_a)), (2, SemDistMap(values_b))]
        assert order_accuracy(s0, tied) == 0.0

    def test_no_overlap_raises(self):
        stacks = np.zeros((1, 2, 4), dtype=np.int32)
        stacks[0, :, 0] = 1
        stacks[0, :, 3] = 2
        scene = LayerStackScene(4, 2, (InstanceRecord(1), InstanceRecord(2)), stacks)
        with pytest.raises(NoOverlappingPairsError):
            order_accuracy(scene, [(r.id, encode_semdist(scene, r.id)) for r in scene.instances])

    def test_gt_ties_are_excluded_from_the_denominator(self):
        # instances 1 and 2 tie (two opposing single-pixel overlaps); 1 and 3
        # have a clean order, so accuracy must rest on that pair alone
        stacks = np.zeros((2, 2, 4), dtype=np.int32)
        stacks[:, 0, 0] = (1, 2)
        stacks[:, 1, 1] = (2, 1)
        stacks[:, 0, 2] = (1, 3)
        stacks[0, 1, 3] = 3
        scene = LayerStackScene(
            4, 2, (InstanceRecord(1), InstanceRecord(2), InstanceRecord(3)), stacks
        )
        maps = [(r.id, encode_semdist(scene, r.id)) for r in scene.instances]
        assert order_accuracy(scene, maps) == 1.0

    def test_threshold_domain(self, s0):
        maps = self._gt_maps(s0)
        with pytest.raises(ValueError):
            order_accuracy(s0, maps, c=0.95)
        with pytest.raises(ValueError):
            order_accuracy(s0, maps, c=0.0)


class TestAssignMaps:
    def test_assignment_follows_best_overlap(self, s0):
        gt = scene_annotations(s0)
        pred = scene_annotations(s0)
        renamed = [
            InstanceAnnotation(
                id=ann.id + 10,
                amodal=ann.amodal,
                visible=ann.visible,
                occlusion_rate=ann.occlusion_rate,
                score=ann.score,
                category=ann.category,
            )
            for ann in pred
        ]
        maps = {ann.id: encode_semdist(s0, ann.id - 10) for ann in renamed}
        assigned = dict(assign_maps_to_gt(gt, renamed, maps))
        assert set(assigned) == {1, 2}
        assert assigned[1] == encode_semdist(s0, 1)
        assert assigned[2] == encode_semdist(s0, 2)

    def test_predictions_without_maps_are_skipped(self, s0):
        gt = scene_annotations(s0)
        assert assign_maps_to_gt(gt, gt, {}) == []


class TestEvaluate:
    def test_full_report_on_gt(self, corpus):
        scenes = corpus[:6]
        images = [scene_annotations(scene) for scene in scenes]
        order_items = [
            (scene, [(r.id, encode_semdist(scene, r.id)) for r in scene.instances])
            for scene in scenes
        ]
        report = evaluate(images, images, order_items=order_items)
        assert report.ap == 1.0
        assert report.ar10 == 1.0
        assert report.ar100 == 1.0
        assert report.order_accuracy == 1.0
        assert len(report.per_image) == 6
        names = [diag.image for diag in report.per_image]
        assert names == sorted(names)
        for diag in report.per_image:
            assert diag.gt_count == diag.pred_count == diag.matched_at_50

    def test_report_dict_shape(self, s0):
        images = [scene_annotations(s0)]
        report = evaluate(images, images)
        doc = report_to_dict(report)
        assert set(doc) == {
            "ap", "ar10", "ar100", "ar_none", "ar_partial", "ar_heavy",
            "order_accuracy", "per_image", "meta",
        }
        assert doc["order_accuracy"] is None  # no order items were supplied
        assert doc["meta"]["iou_thresholds"] == list(IOU_THRESHOLDS)

    def test_image_count_mismatch(self, s0):
        images = [scene_annotations(s0)]
        with pytest.raises(ValueError):
            evaluate(images, images + images)
