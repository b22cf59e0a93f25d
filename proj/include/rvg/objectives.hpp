#pragma once

#include <span>

#include "rvg/geometry.hpp"
#include "rvg/mask.hpp"

namespace rvg {

inline constexpr double kBceClamp = 1e-7;
inline constexpr double kDiceSmoothing = 1.0;

/// Mean binary cross-entropy; predictions clamped to [1e-7, 1 - 1e-7].
double bce(std::span<const double> pred, std::span<const double> target);

/// d bce / d pred for one element (zero where the clamp is active).
double bce_derivative(double pred, double target);

/// 1 - (2 sum(p t) + eps) / (sum p + sum t + eps).
double dice(std::span<const double> pred, std::span<const double> target,
            double smoothing = kDiceSmoothing);

/// bce + dice with equal weight.
double mask_loss(const MaskFrame& pred, const MaskFrame& target);

/// Mean absolute error over the four corner coordinates.
double l1_box_loss(const Box& pred, const Box& target) noexcept;

/// 1 - giou.
double giou_loss(const Box& pred, const Box& target);

/// Proposer objective over caller-matched pairs:
/// bce(objectness) + lambda1 * mean L1 + lambda2 * mean (1 - GIoU).
double prop_loss(std::span<const double> pred_obj, std::span<const double> gt_obj,
                 std::span<const Box> pred_boxes, std::span<const Box> gt_boxes, double lambda1,
                 double lambda2);

}  // namespace rvg
