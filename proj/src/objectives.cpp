#include "rvg/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "rvg/error.hpp"

namespace rvg {

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* op) {
  if (a != b) {
    throw InvalidArgument(std::string(op) + ": length mismatch (" + std::to_string(a) + " vs " +
                          std::to_string(b) + ")");
  }
}

}  // namespace

double bce(std::span<const double> pred, std::span<const double> target) {
  check_lengths(pred.size(), target.size(), "bce");
  if (pred.empty()) throw InvalidArgument("bce: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(pred[i], kBceClamp, 1.0 - kBceClamp);
    const double t = target[i];
    sum -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
  }
  return sum / static_cast<double>(pred.size());
}

double bce_derivative(double pred, double target) {
  if (pred < kBceClamp || pred > 1.0 - kBceClamp) return 0.0;
  return -target / pred + (1.0 - target) / (1.0 - pred);
}

double dice(std::span<const double> pred, std::span<const double> target, double smoothing) {
  check_lengths(pred.size(), target.size(), "dice");
  double inter = 0.0, sp = 0.0, st = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    inter += pred[i] * target[i];
    sp += pred[i];
    st += target[i];
  }
  return 1.0 - (2.0 * inter + smoothing) / (sp + st + smoothing);
}

double mask_loss(const MaskFrame& pred, const MaskFrame& target) {
  if (pred.width != target.width || pred.height != target.height) {
    throw InvalidArgument("mask_loss: mask dimensions differ");
  }
  return bce(pred.values, target.values) + dice(pred.values, target.values);
}

double l1_box_loss(const Box& pred, const Box& target) noexcept {
  return 0.25 * (std::abs(pred.x1 - target.x1) + std::abs(pred.y1 - target.y1) +
                 std::abs(pred.x2 - target.x2) + std::abs(pred.y2 - target.y2));
}

double giou_loss(const Box& pred, const Box& target) { return 1.0 - giou(pred, target); }

double prop_loss(std::span<const double> pred_obj, std::span<const double> gt_obj,
                 std::span<const Box> pred_boxes, std::span<const Box> gt_boxes, double lambda1,
                 double lambda2) {
  check_lengths(pred_obj.size(), gt_obj.size(), "prop_loss objectness");
  check_lengths(pred_boxes.size(), gt_boxes.size(), "prop_loss boxes");
  double loss = bce(pred_obj, gt_obj);
  if (pred_boxes.empty()) return loss;
  double l1 = 0.0, g = 0.0;
  for (std::size_t i = 0; i < pred_boxes.size(); ++i) {
    l1 += l1_box_loss(pred_boxes[i], gt_boxes[i]);
    g += giou_loss(pred_boxes[i], gt_boxes[i]);
  }
  const double n = static_cast<double>(pred_boxes.size());
  return loss + lambda1 * l1 / n + lambda2 * g / n;
}

}  // namespace rvg
