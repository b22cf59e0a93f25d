#include "rvg/tsf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "rvg/error.hpp"
#include "rvg/random.hpp"

namespace rvg {

void validate(const Trajectory& traj) {
  if (traj.video_id.empty() || traj.target_id.empty()) {
    throw InvalidArgument("trajectory: empty video_id or target_id");
  }
  if (traj.points.empty() && !traj.dropped) {
    throw InvalidArgument("trajectory " + traj.target_id + ": no points");
  }
  for (std::size_t i = 1; i < traj.points.size(); ++i) {
    if (traj.points[i].frame <= traj.points[i - 1].frame) {
      throw InvalidArgument("trajectory " + traj.target_id + ": frames not strictly increasing");
    }
  }
}

std::vector<double> JointFeature::concatenated() const {
  std::vector<double> out(visual);
  for (double s : spatial) out.push_back(spatial_weight * s);
  return out;
}

std::vector<JointFeature> build_joint_features(const Trajectory& traj,
                                               std::span<const FeatureVector> crop_features,
                                               double spatial_weight) {
  if (crop_features.size() != traj.points.size()) {
    throw InvalidArgument("build_joint_features: need one crop feature per trajectory point");
  }
  std::vector<JointFeature> out;
  out.reserve(traj.points.size());
  for (std::size_t i = 0; i < traj.points.size(); ++i) {
    const FeatureVector& raw = crop_features[i];
    double norm = 0.0;
    for (double v : raw) norm += v * v;
    norm = std::sqrt(norm);
    JointFeature jf;
    jf.visual = raw;
    if (norm > 0.0) {
      for (double& v : jf.visual) v /= norm;
    }
    const Box& b = traj.points[i].box;
    jf.spatial = {b.cx(), b.cy(), b.width(), b.height()};
    jf.spatial_weight = spatial_weight;
    out.push_back(std::move(jf));
  }
  return out;
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

using Points = std::span<const std::vector<double>>;

std::vector<std::vector<double>> kmeanspp_init(Points points, int k, Rng& rng) {
  const std::size_t n = points.size();
  std::vector<std::vector<double>> centroids;
  std::vector<bool> chosen(n, false);
  std::size_t first = rng.index(n);
  centroids.push_back(points[first]);
  chosen[first] = true;

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points[i], centroids[0]);

  while (static_cast<int>(centroids.size()) < k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (d2[i] > 0.0 && acc > target) {
          pick = i;
          break;
        }
      }
      if (pick == n) {  // rounding at the tail
        for (std::size_t i = n; i-- > 0;) {
          if (d2[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      // Every point coincides with a centroid; take any unchosen one.
      std::vector<std::size_t> free;
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) free.push_back(i);
      }
      pick = free[rng.index(free.size())];
    }
    chosen[pick] = true;
    centroids.push_back(points[pick]);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points[i], centroids.back()));
    }
  }
  return centroids;
}

double assign(Points points, const std::vector<std::vector<double>>& centroids,
              std::vector<int>& assignments, std::vector<double>& dist) {
  double inertia = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double d = squared_distance(points[i], centroids[c]);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    assignments[i] = best;
    dist[i] = best_d;
    inertia += best_d;
  }
  return inertia;
}

void update_centroids(Points points, const std::vector<int>& assignments,
                      const std::vector<double>& dist, std::vector<std::vector<double>>& centroids) {
  const std::size_t dim = points.front().size();
  std::vector<std::vector<double>> sums(centroids.size(), std::vector<double>(dim, 0.0));
  std::vector<std::size_t> counts(centroids.size(), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto& s = sums[assignments[i]];
    for (std::size_t c = 0; c < dim; ++c) s[c] += points[i][c];
    ++counts[assignments[i]];
  }
  std::vector<bool> taken(points.size(), false);
  for (std::size_t k = 0; k < centroids.size(); ++k) {
    if (counts[k] > 0) {
      for (std::size_t c = 0; c < dim; ++c) centroids[k][c] = sums[k][c] / counts[k];
      continue;
    }
    // Empty cluster: reseed at the point worst served by its centroid.
    std::size_t worst = 0;
    double worst_d = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!taken[i] && dist[i] > worst_d) {
        worst_d = dist[i];
        worst = i;
      }
    }
    taken[worst] = true;
    centroids[k] = points[worst];
  }
}

KMeansResult lloyd(Points points, int k, const KMeansOptions& options, Rng& rng) {
  KMeansResult r;
  r.centroids = kmeanspp_init(points, k, rng);
  r.assignments.assign(points.size(), 0);
  std::vector<double> dist(points.size());
  r.inertia = assign(points, r.centroids, r.assignments, dist);
  r.inertia_history.push_back(r.inertia);

  for (int it = 0; it < options.max_iters; ++it) {
    const std::vector<int> previous = r.assignments;
    const double prev_inertia = r.inertia;
    update_centroids(points, r.assignments, dist, r.centroids);
    r.inertia = assign(points, r.centroids, r.assignments, dist);
    r.inertia_history.push_back(r.inertia);
    if (r.assignments == previous) break;
    if (prev_inertia - r.inertia <= options.rel_tol * prev_inertia) break;
  }
  return r;
}

}  // namespace

KMeansResult kmeans(std::span<const std::vector<double>> points, const KMeansOptions& options) {
  if (points.empty()) throw InvalidArgument("kmeans: empty input");
  if (options.clusters < 1) throw InvalidArgument("kmeans: K must be >= 1");
  if (static_cast<std::size_t>(options.clusters) > points.size()) {
    throw InvalidArgument("kmeans: K=" + std::to_string(options.clusters) + " exceeds N=" +
                          std::to_string(points.size()));
  }
  const std::size_t dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) throw InvalidArgument("kmeans: points disagree on dimension");
  }

  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  const int restarts = std::max(1, options.restarts);
  for (int r = 0; r < restarts; ++r) {
    Rng rng(Rng::mix(options.seed, static_cast<std::uint64_t>(r)));
    KMeansResult run = lloyd(points, options.clusters, options, rng);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

std::vector<std::size_t> select_representatives(std::span<const JointFeature> features, int clusters,
                                                std::uint64_t seed, int restarts) {
  std::vector<std::vector<double>> points;
  points.reserve(features.size());
  for (const JointFeature& f : features) points.push_back(f.concatenated());

  KMeansOptions opts;
  opts.clusters = clusters;
  opts.seed = seed;
  opts.restarts = restarts;
  const KMeansResult km = kmeans(points, opts);

  std::vector<bool> used(points.size(), false);
  std::vector<std::size_t> picks;
  for (int c = 0; c < clusters; ++c) {
    std::size_t best = points.size();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (km.assignments[i] != c) continue;
      const double d = squared_distance(points[i], km.centroids[c]);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    if (best == points.size()) {  // empty cluster after tolerance stop
      for (std::size_t i = 0; i < points.size(); ++i) {
        const double d = squared_distance(points[i], km.centroids[c]);
        if (!used[i] && d < best_d) {
          best_d = d;
          best = i;
        }
      }
    }
    used[best] = true;
    picks.push_back(best);
  }
  std::sort(picks.begin(), picks.end());
  return picks;
}

ProjectionMap::ProjectionMap(int dim_in, int dim_out, std::vector<double> matrix)
    : dim_in_(dim_in), dim_out_(dim_out), matrix_(std::move(matrix)) {
  if (dim_in <= 0 || dim_out <= 0) throw InvalidArgument("ProjectionMap: dims must be positive");
  if (matrix_.size() != static_cast<std::size_t>(dim_in) * dim_out) {
    throw InvalidArgument("ProjectionMap: matrix size != dim_in*dim_out");
  }
  for (double v : matrix_) {
    if (!std::isfinite(v)) throw InvalidArgument("ProjectionMap: non-finite entry");
  }
}

ProjectionMap ProjectionMap::identity(int dim) {
  std::vector<double> m(static_cast<std::size_t>(dim) * dim, 0.0);
  for (int i = 0; i < dim; ++i) m[static_cast<std::size_t>(i) * dim + i] = 1.0;
  return ProjectionMap(dim, dim, std::move(m));
}

ProjectionMap ProjectionMap::random(int dim_in, int dim_out, std::uint64_t seed, double scale) {
  Rng rng(seed);
  std::vector<double> m(static_cast<std::size_t>(dim_in) * dim_out);
  for (double& v : m) v = scale * rng.normal();
  return ProjectionMap(dim_in, dim_out, std::move(m));
}

FeatureVector ProjectionMap::apply(std::span<const double> v) const {
  if (static_cast<int>(v.size()) != dim_in_) {
    throw InvalidArgument("ProjectionMap: input has dim " + std::to_string(v.size()) + ", expected " +
                          std::to_string(dim_in_));
  }
  FeatureVector out(static_cast<std::size_t>(dim_out_), 0.0);
  for (int r = 0; r < dim_out_; ++r) {
    const double* row = matrix_.data() + static_cast<std::size_t>(r) * dim_in_;
    double s = 0.0;
    for (int c = 0; c < dim_in_; ++c) s += row[c] * v[c];
    out[r] = s;
  }
  return out;
}

ProjectionMap ProjectionMap::scaled(double factor) const {
  std::vector<double> m(matrix_);
  for (double& v : m) v *= factor;
  return ProjectionMap(dim_in_, dim_out_, std::move(m));
}

TsfTokenSet emit_tsf_tokens(std::span<const FeatureVector> selected, const ProjectionMap& proj,
                            std::vector<std::size_t> source_indices) {
  if (!source_indices.empty() && source_indices.size() != selected.size()) {
    throw InvalidArgument("emit_tsf_tokens: one source index per selected feature");
  }
  TsfTokenSet set;
  set.tokens.reserve(selected.size());
  for (const FeatureVector& f : selected) set.tokens.push_back(proj.apply(f));
  if (source_indices.empty()) {
    source_indices.resize(selected.size());
    std::iota(source_indices.begin(), source_indices.end(), std::size_t{0});
  }
  set.source_indices = std::move(source_indices);
  return set;
}

Trajectory iou_clean(const Trajectory& traj, const Trajectory& reference, double threshold) {
  std::map<int, Box> ref;
  for (const auto& p : reference.points) ref.emplace(p.frame, p.box);
  Trajectory out = traj;
  out.points.clear();
  for (const auto& p : traj.points) {
    auto it = ref.find(p.frame);
    if (it == ref.end() || iou(p.box, it->second) >= threshold) out.points.push_back(p);
  }
  return out;
}

namespace {

// floor(p*T) with a small guard so that e.g. 0.29*100 yields 29.
std::size_t fraction_count(double p, std::size_t total) {
  if (p <= 0.0) return 0;
  const double raw = std::floor(p * static_cast<double>(total) + 1e-9);
  return std::min(total, static_cast<std::size_t>(raw));
}

void check_fraction(double p, const char* op) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument(std::string(op) + ": p must lie in [0, 1]");
}

}  // namespace

Trajectory corrupt_jitter(const Trajectory& traj, double p, std::uint64_t seed) {
  check_fraction(p, "corrupt_jitter");
  if (p == 0.0) return traj;
  Rng rng(seed);
  Trajectory out = traj;
  for (auto& pt : out.points) {
    const Box& b = pt.box;
    const double shift_x = rng.uniform(-p, p);
    const double shift_y = rng.uniform(-p, p);
    const double scale_w = rng.uniform(1.0 - p, 1.0 + p);
    const double scale_h = rng.uniform(1.0 - p, 1.0 + p);
    pt.box = clamp_box(Box::from_center(b.cx() + shift_x * b.width(), b.cy() + shift_y * b.height(),
                                        b.width() * scale_w, b.height() * scale_h));
  }
  return out;
}

std::vector<Trajectory> corrupt_id_switch(std::span<const Trajectory> trajs, double p,
                                          std::uint64_t seed) {
  check_fraction(p, "corrupt_id_switch");
  std::vector<Trajectory> out(trajs.begin(), trajs.end());
  if (p == 0.0) return out;

  std::map<std::string, std::vector<std::size_t>> by_video;
  for (std::size_t i = 0; i < trajs.size(); ++i) by_video[trajs[i].video_id].push_back(i);

  Rng rng(seed);
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    const auto& group = by_video[trajs[i].video_id];
    if (group.size() < 2) {
      throw InvalidArgument("corrupt_id_switch: video '" + trajs[i].video_id +
                            "' has a single trajectory, no donor available");
    }
    const std::size_t total = trajs[i].points.size();
    const std::size_t n = fraction_count(p, total);
    if (n == 0) continue;

    std::vector<std::size_t> donors;
    for (std::size_t j : group) {
      if (j != i) donors.push_back(j);
    }
    const Trajectory& donor = trajs[donors[rng.index(donors.size())]];
    std::map<int, Box> donor_boxes;
    for (const auto& pt : donor.points) donor_boxes.emplace(pt.frame, pt.box);

    // Runs as (start, length) over point indices.
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    const std::size_t free = total - n;
    if (free >= 1 && n >= 2 && rng.uniform() < 0.5) {
      const std::size_t first = 1 + rng.index(n - 1);
      const std::size_t gap = 1 + rng.index(free);
      const std::size_t lead = rng.index(free - gap + 1);
      runs.emplace_back(lead, first);
      runs.emplace_back(lead + first + gap, n - first);
    } else {
      runs.emplace_back(rng.index(free + 1), n);
    }

    for (auto [start, len] : runs) {
      for (std::size_t k = start; k < start + len; ++k) {
        auto& pt = out[i].points[k];
        auto it = donor_boxes.find(pt.frame);
        if (it != donor_boxes.end()) pt.box = it->second;
      }
    }
  }
  return out;
}

Trajectory corrupt_dropout(const Trajectory& traj, double p, std::uint64_t seed) {
  check_fraction(p, "corrupt_dropout");
  const std::size_t total = traj.points.size();
  const std::size_t n = fraction_count(p, total);
  if (n == 0) return traj;

  Rng rng(seed);
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t k = 0; k < n; ++k) {
    std::swap(order[k], order[k + rng.index(total - k)]);
  }
  std::vector<bool> drop(total, false);
  for (std::size_t k = 0; k < n; ++k) drop[order[k]] = true;

  Trajectory out = traj;
  out.points.clear();
  for (std::size_t k = 0; k < total; ++k) {
    if (!drop[k]) out.points.push_back(traj.points[k]);
  }
  if (out.points.empty()) out.dropped = true;
  return out;
}

CorruptionKind parse_corruption_kind(std::string_view name) {
  if (name == "none") return CorruptionKind::none;
  if (name == "jitter") return CorruptionKind::jitter;
  if (name == "id_switch" || name == "idswitch") return CorruptionKind::id_switch;
  if (name == "dropout") return CorruptionKind::dropout;
  throw InvalidArgument("unknown corruption kind '" + std::string(name) + "'");
}

std::string_view to_string(CorruptionKind kind) {
  switch (kind) {
    case CorruptionKind::none: return "none";
    case CorruptionKind::jitter: return "jitter";
    case CorruptionKind::id_switch: return "id_switch";
    case CorruptionKind::dropout: return "dropout";
  }
  return "none";
}

std::vector<Trajectory> apply_corruption(std::span<const Trajectory> trajs, CorruptionKind kind,
                                         double p, std::uint64_t seed) {
  switch (kind) {
    case CorruptionKind::none:
      return {trajs.begin(), trajs.end()};
    case CorruptionKind::id_switch:
      return corrupt_id_switch(trajs, p, seed);
    case CorruptionKind::jitter:
    case CorruptionKind::dropout: {
      std::vector<Trajectory> out;
      out.reserve(trajs.size());
      for (std::size_t i = 0; i < trajs.size(); ++i) {
        const std::uint64_t s = Rng::mix(seed, i);
        out.push_back(kind == CorruptionKind::jitter ? corrupt_jitter(trajs[i], p, s)
                                                     : corrupt_dropout(trajs[i], p, s));
      }
      return out;
    }
  }
  return {trajs.begin(), trajs.end()};
}

namespace {

constexpr std::string_view kTemplates[] = {
    "What is the <region> doing during this video?",
    "Where is the <region> throughout this video?",
    "Can you segment the <region> in every frame?",
};
constexpr std::string_view kPlaceholder = "<region>";

}  // namespace

std::span<const std::string_view> qa_templates() { return kTemplates; }

QaPair render_qa(std::size_t template_id, std::string_view region_phrase, std::string_view caption) {
  if (template_id >= std::size(kTemplates)) {
    throw InvalidArgument("render_qa: unknown template id " + std::to_string(template_id));
  }
  if (region_phrase.empty()) throw InvalidArgument("render_qa: empty region phrase");
  std::string q(kTemplates[template_id]);
  for (std::size_t pos = q.find(kPlaceholder); pos != std::string::npos;
       pos = q.find(kPlaceholder, pos + region_phrase.size())) {
    q.replace(pos, kPlaceholder.size(), region_phrase);
  }
  return {std::move(q), std::string(caption)};
}

}  // namespace rvg
