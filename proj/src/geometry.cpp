#include "rvg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rvg/error.hpp"

namespace rvg {

namespace {

double clamp01(double v) noexcept { return std::clamp(v, 0.0, 1.0); }

}  // namespace

bool is_valid(const Box& b) noexcept {
  return std::isfinite(b.x1) && std::isfinite(b.y1) && std::isfinite(b.x2) &&
         std::isfinite(b.y2) && b.x1 <= b.x2 && b.y1 <= b.y2;
}

Box clamp_box(const Box& b) noexcept {
  Box out{clamp01(b.x1), clamp01(b.y1), clamp01(b.x2), clamp01(b.y2)};
  if (out.x1 > out.x2) out.x1 = out.x2 = 0.5 * (out.x1 + out.x2);
  if (out.y1 > out.y2) out.y1 = out.y2 = 0.5 * (out.y1 + out.y2);
  return out;
}

double intersection_area(const Box& a, const Box& b) noexcept {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

double iou(const Box& a, const Box& b) noexcept {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

double giou(const Box& a, const Box& b) {
  if (!(a.area() > 0.0) || !(b.area() > 0.0)) {
    throw GeometryError("giou: degenerate box (zero area)");
  }
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  const double enclosure = (std::max(a.x2, b.x2) - std::min(a.x1, b.x1)) *
                           (std::max(a.y2, b.y2) - std::min(a.y1, b.y1));
  return inter / uni - (enclosure - uni) / enclosure;
}

GiouGradient giou_with_gradient(const Box& p, const Box& t) {
  if (!(t.area() > 0.0)) throw GeometryError("giou: degenerate target box");

  const double pw = p.width(), ph = p.height();
  const double iw_raw = std::min(p.x2, t.x2) - std::max(p.x1, t.x1);
  const double ih_raw = std::min(p.y2, t.y2) - std::max(p.y1, t.y1);
  const bool overlap = iw_raw > 0.0 && ih_raw > 0.0;
  const double iw = overlap ? iw_raw : 0.0;
  const double ih = overlap ? ih_raw : 0.0;
  const double inter = iw * ih;
  const double uni = pw * ph + t.area() - inter;
  const double ew = std::max(p.x2, t.x2) - std::min(p.x1, t.x1);
  const double eh = std::max(p.y2, t.y2) - std::min(p.y1, t.y1);
  const double enc = ew * eh;

  // Partials with respect to (x1, y1, x2, y2) of the prediction.
  std::array<double, 4> d_inter{};
  if (overlap) {
    if (p.x1 > t.x1) d_inter[0] = -ih;
    if (p.y1 > t.y1) d_inter[1] = -iw;
    if (p.x2 < t.x2) d_inter[2] = ih;
    if (p.y2 < t.y2) d_inter[3] = iw;
  }
  const std::array<double, 4> d_area{-ph, -pw, ph, pw};
  std::array<double, 4> d_enc{};
  if (p.x1 < t.x1) d_enc[0] = -eh;
  if (p.y1 < t.y1) d_enc[1] = -ew;
  if (p.x2 > t.x2) d_enc[2] = eh;
  if (p.y2 > t.y2) d_enc[3] = ew;

  GiouGradient out;
  out.value = inter / uni - 1.0 + uni / enc;
  for (int k = 0; k < 4; ++k) {
    const double d_uni = d_area[k] - d_inter[k];
    out.d_pred[k] = (d_inter[k] * uni - inter * d_uni) / (uni * uni) +
                    (d_uni * enc - uni * d_enc[k]) / (enc * enc);
  }
  return out;
}

std::vector<std::size_t> nms_indices(std::span<const ScoredBox> candidates, double iou_threshold) {
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return candidates[a].score > candidates[b].score;
  });

  std::vector<std::size_t> kept;
  for (std::size_t idx : order) {
    const Box& box = candidates[idx].box;
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return iou(candidates[k].box, box) > iou_threshold;
    });
    if (!suppressed) kept.push_back(idx);
  }
  return kept;
}

std::vector<ScoredBox> nms(std::span<const ScoredBox> candidates, double iou_threshold) {
  std::vector<ScoredBox> out;
  for (std::size_t idx : nms_indices(candidates, iou_threshold)) out.push_back(candidates[idx]);
  return out;
}

namespace {

struct DeltaTrace {
  double x1, y1, x2, y2;
  bool collapse_x, collapse_y;
};

DeltaTrace unclamped_delta(const Box& b, const BoxDelta& d) noexcept {
  // Same as shifting (cx, cy, w, h) but written per edge, so a zero delta is exact.
  const double w = b.width() + d.dw;
  const double h = b.height() + d.dh;
  DeltaTrace t{b.x1 + d.dcx - 0.5 * d.dw, b.y1 + d.dcy - 0.5 * d.dh, b.x2 + d.dcx + 0.5 * d.dw,
               b.y2 + d.dcy + 0.5 * d.dh, w < 0.0, h < 0.0};
  if (t.collapse_x) t.x1 = t.x2 = b.cx() + d.dcx;
  if (t.collapse_y) t.y1 = t.y2 = b.cy() + d.dcy;
  return t;
}

}  // namespace

Box apply_delta(const Box& b, const BoxDelta& d) noexcept {
  const DeltaTrace t = unclamped_delta(b, d);
  return {clamp01(t.x1), clamp01(t.y1), clamp01(t.x2), clamp01(t.y2)};
}

std::array<std::array<double, 4>, 4> apply_delta_jacobian(const Box& b, const BoxDelta& d) noexcept {
  const DeltaTrace t = unclamped_delta(b, d);
  std::array<std::array<double, 4>, 4> j{};
  // x1 = cx - w/2, x2 = cx + w/2 (or both = cx when collapsed).
  j[0] = {1.0, 0.0, t.collapse_x ? 0.0 : -0.5, 0.0};
  j[2] = {1.0, 0.0, t.collapse_x ? 0.0 : 0.5, 0.0};
  j[1] = {0.0, 1.0, 0.0, t.collapse_y ? 0.0 : -0.5};
  j[3] = {0.0, 1.0, 0.0, t.collapse_y ? 0.0 : 0.5};
  const std::array<double, 4> raw{t.x1, t.y1, t.x2, t.y2};
  for (int r = 0; r < 4; ++r) {
    if (raw[r] < 0.0 || raw[r] > 1.0) j[r] = {0.0, 0.0, 0.0, 0.0};
  }
  return j;
}

}  // namespace rvg
