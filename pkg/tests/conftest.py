import numpy as np
import pytest

from semdist import BinaryMask, GenConfig, InstanceRecord, LayerStackScene, generate


def build_s0() -> LayerStackScene:
    """3x3 reference scene.

    Instance 1 covers rows 0 and 1 and sits in front; instance 2 covers rows
    1 and 2. Row 1 is the overlap, so instance 2 is occluded there (level 1)
    while instance 1 is fully visible.
    """
    a = np.zeros((3, 3), dtype=bool)
    a[0:2, :] = True
    b = np.zeros((3, 3), dtype=bool)
    b[1:3, :] = True
    return LayerStackScene.from_layers(
        3,
        3,
        [
            (InstanceRecord(1, "front"), BinaryMask(a)),
            (InstanceRecord(2, "back"), BinaryMask(b)),
        ],
    )


@pytest.fixture
def s0() -> LayerStackScene:
    return build_s0()


@pytest.fixture(scope="session")
def corpus() -> list[LayerStackScene]:
    """Forty small generated scenes shared by the property tests."""
    return [generate(GenConfig(seed=1000 + i)) for i in range(40)]
