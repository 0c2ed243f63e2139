"""Latent subcategory models with dataset-bias correction."""

from ._core import (
    Collection,
    DebiasModel,
    average_precision,
    bound_check,
    iou,
    kmeans,
    load_collection,
    pool_boxes_median,
    pool_boxes_nms,
    project_rel_pos,
    save_collection,
    synth_collection,
    train_aggregate,
    train_debias,
)

__all__ = [
    "Collection",
    "DebiasModel",
    "average_precision",
    "bound_check",
    "iou",
    "kmeans",
    "load_collection",
    "pool_boxes_median",
    "pool_boxes_nms",
    "project_rel_pos",
    "save_collection",
    "synth_collection",
    "train_aggregate",
    "train_debias",
]
