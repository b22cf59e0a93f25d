#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rvg/geometry.hpp"
#include "rvg/mask.hpp"

namespace rvg {

inline constexpr double kBoundaryRadiusFrac = 0.008;

/// Region similarity |p & g| / |p | g|; 1 when both masks are empty.
double j_measure(const MaskFrame& pred, const MaskFrame& gt);

/// Foreground pixels with a 4-neighbour that is background or outside the frame.
std::vector<bool> boundary_map(const MaskFrame& mask);

/// ceil(radius_frac * image diagonal), in pixels.
int boundary_tolerance(int width, int height, double radius_frac = kBoundaryRadiusFrac);

/// Contour accuracy: harmonic mean of boundary precision and recall, matching
/// boundary pixels within a disk of boundary_tolerance() pixels.
double f_measure(const MaskFrame& pred, const MaskFrame& gt, double radius_frac = kBoundaryRadiusFrac);

struct SequenceScore {
  std::string video_id;
  double j = 0.0;
  double f = 0.0;
  double jf = 0.0;  // (j + f) / 2
};

SequenceScore sequence_eval(const MaskVideo& pred, const MaskVideo& gt);

struct MetricReport {
  std::vector<SequenceScore> sequences;
  double mean_j = 0.0;
  double mean_f = 0.0;
  double mean_jf = 0.0;  // (mean_j + mean_f) / 2
};

/// Unweighted mean over sequences.
MetricReport aggregate(std::vector<SequenceScore> sequences);

/// CSV "video_id,J,F,JF" with 4 decimals and a final ALL row.
void write_metric_csv(std::ostream& os, const MetricReport& report);

double miou(std::span<const double> ious);

struct FrameProposals {
  std::vector<Box> boxes;
  std::vector<double> objectness;
};

/// Fraction of ground-truth boxes matched (IoU > iou_thresh) by at least one of
/// the top-k proposals of their frame, ranked by objectness (stable).
/// Throws InvalidArgument when there is no ground truth.
double oracle_recall(std::span<const FrameProposals> frames, std::span<const std::vector<Box>> gt,
                     std::size_t topk, double iou_thresh);

/// JSON lines {"video_id":..,"frame":..,"boxes":[[x1,y1,x2,y2],..],"objectness":[..]}.
struct ProposalRecord {
  std::string video_id;
  int frame = 0;
  FrameProposals proposals;
};

void write_proposals(std::ostream& os, std::span<const ProposalRecord> records);
std::vector<ProposalRecord> read_proposals(std::istream& is);
std::vector<ProposalRecord> read_proposals_file(const std::string& path);

}  // namespace rvg
