"""Mean-reduced loss numerics with analytic gradients.

These exist so external trainers and the test suite agree on exact loss
values and gradients; there is no autograd here, every gradient is written
out by hand and checked against finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import DimensionMismatchError

__all__ = [
    "PROB_EPS",
    "LossWeights",
    "bce",
    "smooth_l1",
    "total_loss",
]

PROB_EPS = 1e-7
"""Probabilities are clamped to [PROB_EPS, 1 - PROB_EPS] before the logs."""


@dataclass(frozen=True)
class LossWeights:
    """Non-negative weights combining the four training loss terms."""

    proposal: float = 1.0
    global_layering: float = 1.0
    instance_layering: float = 1.0
    semdist: float = 1.0

    def __post_init__(self) -> None:
        for name in ("proposal", "global_layering", "instance_layering", "semdist"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"loss weight {name} must be non-negative")


def _pair(pred, target) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if p.shape != t.shape:
        raise DimensionMismatchError(
            f"prediction and target shapes differ: {p.shape} vs {t.shape}"
        )
    if p.size == 0:
        raise ValueError("loss inputs must not be empty")
    return p, t


def bce(pred, target) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy and its gradient with respect to pred.

    Predictions are clamped away from 0 and 1 before the logarithms; where
    the clamp is active the gradient is 0, matching the flat spots of the
    clamped composite. Targets must lie in [0, 1].
    """
    p, t = _pair(pred, target)
    if ((t < 0.0) | (t > 1.0)).any():
        raise ValueError("bce targets must lie in [0, 1]")
    clamped = np.clip(p, PROB_EPS, 1.0 - PROB_EPS)
    loss = float(np.mean(-(t * np.log(clamped) + (1.0 - t) * np.log1p(-clamped))))
    inside = (p >= PROB_EPS) & (p <= 1.0 - PROB_EPS)
    grad = np.where(
        inside, ((1.0 - t) / (1.0 - clamped) - t / clamped) / p.size, 0.0
    )
    return loss, grad


def smooth_l1(pred, target) -> tuple[float, np.ndarray]:
    """Mean smooth L1 (quadratic inside |d| < 1, linear outside) and gradient.

    The two branches agree in value (0.5) and slope (1) at |d| = 1.
    """
    p, t = _pair(pred, target)
    diff = p - t
    magnitude = np.abs(diff)
    quadratic = magnitude < 1.0
    elements = np.where(quadratic, 0.5 * diff * diff, magnitude - 0.5)
    grad = np.where(quadratic, diff, np.sign(diff)) / p.size
    return float(np.mean(elements)), grad


def total_loss(
    proposal_loss: float,
    global_layering_loss: float,
    instance_layering_loss: float,
    semdist_loss: float,
    weights: LossWeights = LossWeights(),
) -> float:
    """Weighted sum of the four scalar loss terms."""
    return float(
        weights.proposal * proposal_loss
        + weights.global_layering * global_layering_loss
        + weights.instance_layering * instance_layering_loss
        + weights.semdist * semdist_loss
    )
