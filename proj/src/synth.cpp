#include "rvg/synth.hpp"

#include <algorithm>
#include <cmath>

#include "rvg/error.hpp"
#include "rvg/random.hpp"

namespace rvg {

namespace {

constexpr std::uint64_t kPrototypeSalt = 0xCA7E6;
constexpr std::uint64_t kQueryMapSalt = 0x9E4;
constexpr int kPlacementTries = 200;
constexpr int kBackgroundTries = 50;

void normalize(FeatureVector& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (n > 0.0) {
    for (double& x : v) x /= n;
  }
}

FeatureVector random_unit(Rng& rng, int dim) {
  FeatureVector v(static_cast<std::size_t>(dim));
  for (double& x : v) x = rng.normal();
  normalize(v);
  return v;
}

std::vector<FeatureVector> prototypes(const SceneConfig& c) {
  Rng rng(Rng::mix(c.seed, kPrototypeSalt));
  std::vector<FeatureVector> out;
  for (int i = 0; i < c.categories; ++i) out.push_back(random_unit(rng, c.feature_dim));
  return out;
}

Box clamp_to_frame(double cx, double cy, double w, double h) {
  cx = std::clamp(cx, w / 2, 1.0 - w / 2);
  cy = std::clamp(cy, h / 2, 1.0 - h / 2);
  return Box::from_center(cx, cy, w, h);
}

// Smooth random walk with reflecting walls.
Trajectory random_walk(Rng& rng, const Box& start, int frames, std::string video_id, std::string target_id) {
  Trajectory t{std::move(video_id), std::move(target_id), {}, false};
  double cx = start.cx(), cy = start.cy();
  const double w0 = start.width(), h0 = start.height();
  double vx = rng.normal(0.0, 0.02), vy = rng.normal(0.0, 0.02);
  double scale = 1.0;
  for (int f = 0; f < frames; ++f) {
    const double w = w0 * scale, h = h0 * scale;
    const Box b = clamp_to_frame(cx, cy, w, h);
    t.points.push_back({f, b, 1.0});
    cx = b.cx() + vx;
    cy = b.cy() + vy;
    if (cx < w / 2 || cx > 1.0 - w / 2) vx = -vx;
    if (cy < h / 2 || cy > 1.0 - h / 2) vy = -vy;
    vx = 0.8 * vx + rng.normal(0.0, 0.01);
    vy = 0.8 * vy + rng.normal(0.0, 0.01);
    scale = std::clamp(scale * (1.0 + rng.normal(0.0, 0.03)), 0.8, 1.25);
  }
  return t;
}

// Cells whose bilinear support can be reached by samples inside the box.
std::pair<int, int> support(double lo, double hi, int n) {
  const int a = static_cast<int>(std::floor(lo * n - 0.5));
  const int b = static_cast<int>(std::floor(hi * n - 0.5)) + 1;
  return {std::clamp(a, 0, n - 1), std::clamp(b, 0, n - 1)};
}

void paint(FeatureMap& map, const Box& b, const FeatureVector& identity) {
  const auto [x0, x1] = support(b.x1, b.x2, map.width());
  const auto [y0, y1] = support(b.y1, b.y2, map.height());
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) std::copy(identity.begin(), identity.end(), map.cell(y, x).begin());
  }
}

FeaturePyramid render_frame(const SceneConfig& c, const std::vector<SceneObject>& objects, int frame,
                            Rng& rng) {
  FeaturePyramid p;
  for (int stride : {2, 1}) {
    const int side = c.grid_size / stride;
    FeatureMap map(side, side, c.feature_dim);
    for (const SceneObject& o : objects) paint(map, o.trajectory.points[frame].box, o.identity);
    if (c.noise > 0.0) {
      for (double& v : map.data()) v += rng.normal(0.0, c.noise);
    }
    p.levels.push_back(std::move(map));
    p.strides.push_back(stride);
  }
  return p;
}

double max_iou(const Box& b, const std::vector<SceneObject>& objects) {
  double best = 0.0;
  for (const SceneObject& o : objects) best = std::max(best, iou(b, o.trajectory.points.front().box));
  return best;
}

}  // namespace

void validate(const SceneConfig& c) {
  if (c.count < 1) throw InvalidArgument("scenes: count must be >= 1");
  if (c.frames < 1) throw InvalidArgument("scenes: frames must be >= 1");
  if (c.grid_size < 4 || c.grid_size % 2 != 0) throw InvalidArgument("scenes: grid_size must be even and >= 4");
  if (c.n_objects < 1) throw InvalidArgument("scenes: n_objects must be >= 1");
  if (c.n_objects > c.categories) throw InvalidArgument("scenes: n_objects exceeds the category count");
  if (c.feature_dim < 1) throw InvalidArgument("scenes: feature_dim must be >= 1");
  if (c.noise < 0.0 || c.instance_spread < 0.0 || c.language_noise < 0.0) {
    throw InvalidArgument("scenes: noise levels must be non-negative");
  }
  if (c.roi_size < 1) throw InvalidArgument("scenes: roi_size must be >= 1");
  if (c.proposals_per_object < 1 || c.background_proposals < 0) {
    throw InvalidArgument("scenes: invalid proposal counts");
  }
  if (c.mask_size < 1) throw InvalidArgument("scenes: mask_size must be >= 1");
}

int head_width(const SceneConfig& config) { return config.feature_dim + 5; }

ProjectionMap query_map(const SceneConfig& config) {
  return ProjectionMap::random(config.feature_dim, head_width(config), Rng::mix(config.seed, kQueryMapSalt),
                               config.query_scale);
}

SyntheticScene gen_scene(const SceneConfig& c, std::size_t index) {
  validate(c);
  const auto protos = prototypes(c);
  Rng rng(Rng::mix(c.seed, index));

  SyntheticScene s;
  s.video_id = "scene" + std::to_string(index);
  s.frames = c.frames;

  // Distinct categories per scene.
  std::vector<int> cats(static_cast<std::size_t>(c.categories));
  for (int i = 0; i < c.categories; ++i) cats[i] = i;
  for (int i = 0; i < c.n_objects; ++i) {
    const auto j = i + static_cast<int>(rng.index(static_cast<std::uint64_t>(c.categories - i)));
    std::swap(cats[i], cats[j]);
  }

  for (int i = 0; i < c.n_objects; ++i) {
    Box start;
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementTries && !placed; ++attempt) {
      const double w = rng.uniform(0.15, 0.35), h = rng.uniform(0.15, 0.35);
      start = clamp_to_frame(rng.uniform(), rng.uniform(), w, h);
      placed = max_iou(start, s.objects) <= c.max_start_overlap;
    }
    if (!placed) {
      throw GeometryError(s.video_id + ": cannot place object " + std::to_string(i) + " without overlap");
    }
    SceneObject o;
    o.category = cats[i];
    o.identity = protos[cats[i]];
    for (double& v : o.identity) v += c.instance_spread * rng.normal() / std::sqrt(double(c.feature_dim));
    normalize(o.identity);
    o.trajectory = random_walk(rng, start, c.frames, s.video_id, "obj" + std::to_string(i));
    s.objects.push_back(std::move(o));
  }
  s.distractors = c.n_objects - 1;
  s.target = rng.index(static_cast<std::uint64_t>(c.n_objects));

  for (int f = 0; f < c.frames; ++f) s.pyramids.push_back(render_frame(c, s.objects, f, rng));

  FeatureVector phrase = s.target_object().identity;
  for (double& v : phrase) v += c.language_noise * rng.normal() / std::sqrt(double(c.feature_dim));
  normalize(phrase);
  s.query = query_map(c).apply(phrase);

  s.gt_masks.video_id = s.video_id;
  for (const TrajectoryPoint& p : s.target_object().trajectory.points) {
    s.gt_masks.frames.push_back(rasterize_box(p.box, c.mask_size, c.mask_size));
  }

  std::vector<ScoredBox> raw;
  for (const SceneObject& o : s.objects) {
    const Box& b = o.trajectory.points.front().box;
    for (int k = 0; k < c.proposals_per_object; ++k) {
      const double cx = b.cx() + rng.uniform(-0.2, 0.2) * b.width();
      const double cy = b.cy() + rng.uniform(-0.2, 0.2) * b.height();
      const double w = b.width() * rng.uniform(1.0, 1.45), h = b.height() * rng.uniform(1.0, 1.45);
      const Box jittered = clamp_to_frame(cx, cy, std::min(w, 1.0), std::min(h, 1.0));
      // Objectness tracks localization quality, not which object is referred to.
      const double objectness = std::clamp(0.3 + 0.6 * iou(jittered, b) + rng.normal(0.0, 0.05), 0.05, 0.99);
      raw.push_back({jittered, objectness});
    }
  }
  for (int k = 0; k < c.background_proposals; ++k) {
    for (int attempt = 0; attempt < kBackgroundTries; ++attempt) {
      const double w = rng.uniform(0.1, 0.3), h = rng.uniform(0.1, 0.3);
      const Box b = clamp_to_frame(rng.uniform(), rng.uniform(), w, h);
      if (max_iou(b, s.objects) < 0.1) {
        raw.push_back({b, rng.uniform(0.05, 0.5)});
        break;
      }
    }
  }
  s.proposals = nms(raw, c.proposal_nms);
  return s;
}

std::vector<SyntheticScene> gen_scenes(const SceneConfig& config) {
  validate(config);
  std::vector<SyntheticScene> out;
  out.reserve(static_cast<std::size_t>(config.count));
  for (int i = 0; i < config.count; ++i) out.push_back(gen_scene(config, static_cast<std::size_t>(i)));
  return out;
}

std::vector<FeatureVector> roi_tokens(const FeaturePyramid& pyramid, const Box& b, int roi_size) {
  const int fine = pyramid.levels.back().width();
  const int level = pyramid.level_for_box(b, fine / 4.0);
  const PooledRoi roi = roi_align(pyramid.levels[level], b, roi_size, level);
  std::vector<FeatureVector> tokens;
  tokens.reserve(static_cast<std::size_t>(roi_size) * roi_size);
  for (int py = 0; py < roi_size; ++py) {
    for (int px = 0; px < roi_size; ++px) {
      const auto cell = roi.cell(py, px);
      FeatureVector t(cell.begin(), cell.end());
      const double u = (px + 0.5) / roi_size - 0.5, v = (py + 0.5) / roi_size - 0.5;
      t.insert(t.end(), {1.0, u, v, u * u, v * v});
      tokens.push_back(std::move(t));
    }
  }
  // Zero sink: attention mass lands here when no cell matches the query.
  tokens.emplace_back(static_cast<std::size_t>(roi.dim) + 5, 0.0);
  return tokens;
}

FeatureVector crop_feature(const FeaturePyramid& pyramid, const Box& b, int roi_size) {
  const auto rois = roi_align_pyramid(pyramid, b, roi_size);
  return aggregate_pool(rois);
}

ProposalCandidate make_candidate(const FeaturePyramid& pyramid, const ScoredBox& proposal, int roi_size) {
  ProposalCandidate c;
  c.scored_box = proposal;
  c.roi_tokens = roi_tokens(pyramid, proposal.box, roi_size);
  c.g_vec = crop_feature(pyramid, proposal.box, roi_size);
  const Box& b = proposal.box;
  c.g_vec.insert(c.g_vec.end(), {1.0, b.cx(), b.cy(), b.width(), b.height()});
  return c;
}

std::vector<ProposalCandidate> scene_candidates(const SyntheticScene& scene, const SceneConfig& config) {
  std::vector<ProposalCandidate> out;
  out.reserve(scene.proposals.size());
  for (const ScoredBox& p : scene.proposals) out.push_back(make_candidate(scene.pyramids.front(), p, config.roi_size));
  return out;
}

QueryEmbedding tsf_query(const QueryEmbedding& query, const Trajectory& trajectory, const SyntheticScene& scene,
                         const ProjectionMap& map, const SceneConfig& config, int clusters, std::uint64_t seed) {
  std::vector<FeatureVector> crops;
  Trajectory kept{trajectory.video_id, trajectory.target_id, {}, trajectory.dropped};
  for (const TrajectoryPoint& p : trajectory.points) {
    if (p.frame < 0 || p.frame >= static_cast<int>(scene.pyramids.size()) || !(p.box.area() > 0.0)) continue;
    crops.push_back(crop_feature(scene.pyramids[p.frame], p.box, config.roi_size));
    kept.points.push_back(p);
  }
  if (crops.empty()) return query;

  const int k = std::min<int>(clusters, static_cast<int>(crops.size()));
  const auto joint = build_joint_features(kept, crops);
  const auto picks = select_representatives(joint, k, seed);
  std::vector<FeatureVector> selected;
  for (std::size_t i : picks) selected.push_back(crops[i]);
  const TsfTokenSet tokens = emit_tsf_tokens(selected, map, picks);

  QueryEmbedding out = query;
  for (const FeatureVector& t : tokens.tokens) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += t[i];
  }
  for (double& v : out) v /= static_cast<double>(tokens.tokens.size() + 1);
  return out;
}

}  // namespace rvg
