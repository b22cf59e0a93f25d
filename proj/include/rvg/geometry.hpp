#pragma once

#include <array>
#include <span>
#include <vector>

namespace rvg {

/// Axis-aligned box in normalized frame coordinates (x right, y down).
struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const noexcept { return x2 - x1; }
  double height() const noexcept { return y2 - y1; }
  double area() const noexcept { return width() * height(); }
  double cx() const noexcept { return 0.5 * (x1 + x2); }
  double cy() const noexcept { return 0.5 * (y1 + y2); }

  static Box from_center(double cx, double cy, double w, double h) noexcept {
    return {cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
  }

  std::array<double, 4> coords() const noexcept { return {x1, y1, x2, y2}; }

  friend bool operator==(const Box&, const Box&) = default;
};

struct ScoredBox {
  Box box;
  double score = 0.0;

  friend bool operator==(const ScoredBox&, const ScoredBox&) = default;
};

/// Additive offsets in (cx, cy, w, h) space.
struct BoxDelta {
  double dcx = 0.0;
  double dcy = 0.0;
  double dw = 0.0;
  double dh = 0.0;
};

/// x1 <= x2, y1 <= y2 and every coordinate finite.
bool is_valid(const Box& b) noexcept;

/// Clamp every coordinate into [0, 1]; inverted extents collapse to their midpoint.
Box clamp_box(const Box& b) noexcept;

double intersection_area(const Box& a, const Box& b) noexcept;

/// Intersection over union; 0 when the union is empty.
double iou(const Box& a, const Box& b) noexcept;

/// Generalized IoU in (-1, 1]. Throws GeometryError if either box has zero area.
double giou(const Box& a, const Box& b);

/// GIoU value and its gradient with respect to pred's (x1, y1, x2, y2).
/// Only requires `target` to have positive area.
struct GiouGradient {
  double value = 0.0;
  std::array<double, 4> d_pred{};
};
GiouGradient giou_with_gradient(const Box& pred, const Box& target);

/// Greedy non-maximum suppression. A candidate is dropped when its IoU with an
/// already kept box exceeds `iou_threshold`. Output is score-descending; equal
/// scores keep input order.
std::vector<ScoredBox> nms(std::span<const ScoredBox> candidates, double iou_threshold);

/// Indices (into `candidates`) of the boxes `nms` keeps, in output order.
std::vector<std::size_t> nms_indices(std::span<const ScoredBox> candidates, double iou_threshold);

/// Shift center and size by `d`, then clamp to the unit square.
Box apply_delta(const Box& b, const BoxDelta& d) noexcept;

/// Jacobian of apply_delta: rows are (x1, y1, x2, y2), columns (dcx, dcy, dw, dh).
/// Clamped coordinates have zero rows; collapsed extents share the averaged row.
std::array<std::array<double, 4>, 4> apply_delta_jacobian(const Box& b, const BoxDelta& d) noexcept;

}  // namespace rvg
