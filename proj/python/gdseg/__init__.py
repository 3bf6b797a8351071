from ._gdseg import (
    Segmenter,
    build_masks,
    gaussian_weight,
    greedy_decode,
    labels_to_segmentation,
    max_match,
    noam_lr,
    parse_line,
    segmentation_to_labels,
    word_f1,
)

__all__ = [
    "Segmenter",
    "build_masks",
    "gaussian_weight",
    "greedy_decode",
    "labels_to_segmentation",
    "max_match",
    "noam_lr",
    "parse_line",
    "segmentation_to_labels",
    "word_f1",
]
