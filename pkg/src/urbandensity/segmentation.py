"""Water/terrain/urban classes, urban mask refinement and urban centers."""

from dataclasses import dataclass

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import AnalysisError

WATER, TERRAIN, URBAN = 1, 2, 3
CENTER = 4

STRUCT_5x5 = np.ones((5, 5), dtype=bool)
EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)

# index -> RGB for the exported segmentation PNG
PALETTE = [
    (0, 0, 0),
    (40, 90, 200),
    (150, 190, 110),
    (200, 80, 60),
    (255, 230, 0),
]


@dataclass(frozen=True, eq=False)
class SegmentationMap:
    classes: np.ndarray
    urban_initial: np.ndarray
    urban_refined: np.ndarray
    urban_final: np.ndarray
    centers: np.ndarray
    thresholds: object
    n_components: int

    def class_counts(self):
        return {
            name: int((self.classes == code).sum())
            for name, code in (("water", WATER), ("terrain", TERRAIN), ("urban", URBAN))
        }

    def indexed_image(self):
        """0 = background, 1..3 = classes, 4 = center; urban shows only U_final."""
        img = np.where(self.classes == URBAN, 0, self.classes).astype(np.uint8)
        img[self.urban_final] = URBAN
        img[self.centers] = CENTER
        return img


def classify(rho, thresholds):
    """Per-pixel class codes: water below tau_water, urban from tau_urban up."""
    v = np.asarray(getattr(rho, "values", rho))
    out = np.full(v.shape, TERRAIN, dtype=np.uint8)
    out[v < thresholds.tau_water] = WATER
    out[v >= thresholds.tau_urban] = URBAN
    return out


def dilate(mask, struct=STRUCT_5x5):
    return ndimage.binary_dilation(mask, structure=struct)


def close(mask, struct=STRUCT_5x5):
    """Closing with background outside the grid.

    The mask is zero-padded by the element radius so the intermediate
    dilation is not clipped, which keeps the closing extensive.
    """
    r = max(struct.shape) // 2
    p = np.pad(mask, r, mode="constant", constant_values=False)
    p = ndimage.binary_dilation(p, structure=struct)
    p = ndimage.binary_erosion(p, structure=struct, border_value=0)
    return p[r:-r, r:-r] if r else p


def refine_urban_mask(mask, struct=STRUCT_5x5):
    """Close(Dilate(mask)) with a square structuring element."""
    mask = np.asarray(mask, dtype=bool)
    return close(dilate(mask, struct), struct)


def label_components(mask):
    """8-connected labels and the number of components."""
    return ndimage.label(mask, structure=EIGHT_CONNECTED)


def filter_components(mask, min_component_px=100):
    """Keep 8-connected components of at least ``min_component_px`` pixels."""
    labels, n = label_components(mask)
    if n == 0:
        return np.zeros_like(mask, dtype=bool), 0
    areas = np.bincount(labels.ravel(), minlength=n + 1)
    keep = areas >= min_component_px
    keep[0] = False
    return keep[labels], int(keep.sum())


def identify_centers(rho, urban_final, thresholds):
    """Pixels denser than tau_center (strictly) inside the final urban mask."""
    v = np.asarray(getattr(rho, "values", rho))
    centers = (v > thresholds.tau_center) & np.asarray(urban_final, dtype=bool)
    if not centers.any():
        raise AnalysisError("no urban centers found", stage="centers")
    return centers


def segment(rho, thresholds, min_component_px=100):
    """Run classify -> refine -> filter -> centers."""
    classes = classify(rho, thresholds)
    initial = classes == URBAN
    refined = refine_urban_mask(initial)
    final, n_comp = filter_components(refined, min_component_px)
    if not final.any():
        raise AnalysisError("no urban area left after component filtering", stage="segmentation")
    centers = identify_centers(rho, final, thresholds)
    return SegmentationMap(classes, initial, refined, final, centers, thresholds, n_comp)


def save_segmentation_png(seg, path):
    img = Image.fromarray(seg.indexed_image(), mode="P")
    flat = [v for rgb in PALETTE for v in rgb]
    img.putpalette(flat + [0] * (768 - len(flat)))
    img.save(path)
