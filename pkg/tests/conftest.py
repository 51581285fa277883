import numpy as np
import pytest

from headforge.geometry import Geometry
from headforge.taxonomy import LabelTaxonomy, MorphRule
from headforge.volumes import LabelVolume


@pytest.fixture
def small_taxonomy() -> LabelTaxonomy:
    """Four classes, identity raw mapping, one dilate and one erode rule."""
    return LabelTaxonomy(
        classes=((0, "background"), (1, "core"), (2, "shell"), (3, "rim")),
        raw_to_class={0: 0, 1: 1, 2: 2, 3: 3},
        morph_rules=(
            MorphRule(source=1, mode="dilate", neighbors=(2,)),
            MorphRule(source=1, mode="erode", neighbors=(2, 3)),
        ),
    )


def make_label_volume(data: np.ndarray, voxel_size_mm: float = 1.0) -> LabelVolume:
    geom = Geometry.isotropic(data.shape, voxel_size_mm)
    return LabelVolume(geometry=geom, data=data)
