from ._rvgcore import (
    Error,
    InvalidArgument,
    cli,
    component_breakdown,
    giou,
    iou,
    nms,
    recommend_tsf,
    total_overhead,
)

__all__ = [
    "Error",
    "InvalidArgument",
    "cli",
    "component_breakdown",
    "giou",
    "iou",
    "nms",
    "recommend_tsf",
    "total_overhead",
]
