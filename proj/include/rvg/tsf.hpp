#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rvg/feature_grid.hpp"
#include "rvg/geometry.hpp"

namespace rvg {

struct TrajectoryPoint {
  int frame = 0;
  Box box;
  double confidence = 1.0;

  friend bool operator==(const TrajectoryPoint&, const TrajectoryPoint&) = default;
};

/// Time series of one tracked target; frames strictly increasing.
struct Trajectory {
  std::string video_id;
  std::string target_id;
  std::vector<TrajectoryPoint> points;
  bool dropped = false;  // set when every point was removed on purpose

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Throws InvalidArgument if ids are empty, frames are not strictly increasing,
/// or the trajectory is empty without being marked dropped.
void validate(const Trajectory& traj);

struct JointFeature {
  FeatureVector visual;          // unit L2 norm
  std::array<double, 4> spatial; // cx, cy, w, h
  double spatial_weight = 0.0;

  /// [visual; spatial_weight * spatial]
  std::vector<double> concatenated() const;
};

inline constexpr double kDefaultSpatialWeight = 0.25;
inline constexpr int kDefaultTsfClusters = 4;

std::vector<JointFeature> build_joint_features(const Trajectory& traj,
                                               std::span<const FeatureVector> crop_features,
                                               double spatial_weight = kDefaultSpatialWeight);

struct KMeansOptions {
  int clusters = kDefaultTsfClusters;
  std::uint64_t seed = 0;
  int restarts = 10;
  int max_iters = 100;
  double rel_tol = 1e-10;
};

struct KMeansResult {
  std::vector<std::vector<double>> centroids;
  std::vector<int> assignments;
  double inertia = 0.0;
  /// Inertia after every assignment step of the winning restart.
  std::vector<double> inertia_history;
};

/// Lloyd's algorithm from k-means++ seeds; the best of `restarts` runs is returned.
KMeansResult kmeans(std::span<const std::vector<double>> points, const KMeansOptions& options);

/// One sample per cluster: the cluster member nearest its centroid (lowest index
/// on ties). Returned indices are sorted ascending, i.e. in frame order.
std::vector<std::size_t> select_representatives(std::span<const JointFeature> features, int clusters,
                                                std::uint64_t seed, int restarts = 10);

/// Dense dim_out x dim_in map (row-major).
class ProjectionMap {
 public:
  ProjectionMap(int dim_in, int dim_out, std::vector<double> matrix);
  static ProjectionMap identity(int dim);
  static ProjectionMap random(int dim_in, int dim_out, std::uint64_t seed, double scale);

  int dim_in() const noexcept { return dim_in_; }
  int dim_out() const noexcept { return dim_out_; }
  const std::vector<double>& matrix() const noexcept { return matrix_; }

  FeatureVector apply(std::span<const double> v) const;
  ProjectionMap scaled(double factor) const;

 private:
  int dim_in_;
  int dim_out_;
  std::vector<double> matrix_;
};

struct TsfTokenSet {
  std::vector<FeatureVector> tokens;
  std::vector<std::size_t> source_indices;
};

TsfTokenSet emit_tsf_tokens(std::span<const FeatureVector> selected, const ProjectionMap& proj,
                            std::vector<std::size_t> source_indices = {});

/// Drops points whose IoU with the same-frame reference box is below `threshold`.
/// Frames missing from the reference are kept.
Trajectory iou_clean(const Trajectory& traj, const Trajectory& reference, double threshold);

/// Per point: centre moves by U(-p, p) * (w, h), size scales by U(1-p, 1+p).
Trajectory corrupt_jitter(const Trajectory& traj, double p, std::uint64_t seed);

/// Replaces floor(p*T) frames, in one or two contiguous runs, with the same-frame
/// boxes of another trajectory from the same video. Output order matches input.
std::vector<Trajectory> corrupt_id_switch(std::span<const Trajectory> trajs, double p,
                                          std::uint64_t seed);

/// Removes a uniform sample of floor(p*T) points.
Trajectory corrupt_dropout(const Trajectory& traj, double p, std::uint64_t seed);

enum class CorruptionKind { none, jitter, id_switch, dropout };
CorruptionKind parse_corruption_kind(std::string_view name);
std::string_view to_string(CorruptionKind kind);

std::vector<Trajectory> apply_corruption(std::span<const Trajectory> trajs, CorruptionKind kind,
                                         double p, std::uint64_t seed);

struct QaPair {
  std::string question;
  std::string answer;
};

/// Referential question templates; "<region>" is the placeholder.
std::span<const std::string_view> qa_templates();
QaPair render_qa(std::size_t template_id, std::string_view region_phrase, std::string_view caption);

}  // namespace rvg
