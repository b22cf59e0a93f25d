#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rvg/feature_grid.hpp"
#include "rvg/filtration_head.hpp"
#include "rvg/geometry.hpp"
#include "rvg/mask.hpp"
#include "rvg/tsf.hpp"

namespace rvg {

struct SceneConfig {
  std::uint64_t seed = 7;
  int count = 1;
  int frames = 8;        // T
  int grid_size = 16;    // side of the finest pyramid level
  int n_objects = 3;
  double noise = 0.1;    // feature noise standard deviation
  int feature_dim = 11;  // identity width D; head tokens are D + 5 wide
  int categories = 6;    // identity prototypes shared by all scenes
  double instance_spread = 0.3;
  double language_noise = 0.6;
  double query_scale = 0.5;  // entry standard deviation of the query map
  int proposals_per_object = 3;
  int background_proposals = 4;
  double proposal_nms = 0.7;
  int roi_size = 4;
  int mask_size = 32;
  double max_start_overlap = 0.1;  // pairwise IoU allowed at frame 0
};

/// Throws InvalidArgument on out-of-range settings.
void validate(const SceneConfig& config);

struct SceneObject {
  int category = 0;
  FeatureVector identity;  // unit norm
  Trajectory trajectory;
};

struct SyntheticScene {
  std::string video_id;
  int frames = 0;
  std::vector<SceneObject> objects;
  std::vector<FeaturePyramid> pyramids;  // one per frame
  std::size_t target = 0;                // index into objects
  QueryEmbedding query;                  // width D + 4
  MaskVideo gt_masks;                    // rasterized target boxes
  std::vector<ScoredBox> proposals;      // frame 0, after NMS
  int distractors = 0;

  const SceneObject& target_object() const { return objects.at(target); }
  const Box& target_box() const { return objects.at(target).trajectory.points.front().box; }
};

/// Head token width for a config: identity width, a presence flag and 4 offset channels.
int head_width(const SceneConfig& config);

/// Fixed linear map from identity space to query space, shared by all scenes of a seed.
ProjectionMap query_map(const SceneConfig& config);

/// Scene i uses the child seed Rng::mix(config.seed, i). Object placement is
/// retried; a scene that cannot be laid out raises GeometryError.
std::vector<SyntheticScene> gen_scenes(const SceneConfig& config);
SyntheticScene gen_scene(const SceneConfig& config, std::size_t index);

/// ROI cells of the box's pyramid level, each followed by a presence flag 1 and
/// its offset code (u - 1/2, v - 1/2, (u - 1/2)^2, (v - 1/2)^2) within the box,
/// then one all-zero sink token.
std::vector<FeatureVector> roi_tokens(const FeaturePyramid& pyramid, const Box& b, int roi_size);

/// Mean ROI feature over every level (width D).
FeatureVector crop_feature(const FeaturePyramid& pyramid, const Box& b, int roi_size);

/// Head input for one proposal: ROI tokens and g = [crop feature; 1; cx, cy, w, h].
ProposalCandidate make_candidate(const FeaturePyramid& pyramid, const ScoredBox& proposal, int roi_size);
std::vector<ProposalCandidate> scene_candidates(const SyntheticScene& scene, const SceneConfig& config);

/// Query averaged with K tokens emitted from the trajectory's representative
/// crop features: (q + sum_k M c_k) / (K + 1). Frames beyond the scene are skipped.
QueryEmbedding tsf_query(const QueryEmbedding& query, const Trajectory& trajectory,
                         const SyntheticScene& scene, const ProjectionMap& map, const SceneConfig& config,
                         int clusters = kDefaultTsfClusters, std::uint64_t seed = 0);

}  // namespace rvg
