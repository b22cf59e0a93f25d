#pragma once

// Random filtration-head batches shared by the unit and acceptance tests.

#include <cmath>
#include <vector>

#include "rvg/filtration_head.hpp"
#include "rvg/random.hpp"

namespace rvg::testing {

inline FeatureVector random_vector(Rng& rng, int d, double sd = 1.0) {
  FeatureVector v(static_cast<std::size_t>(d));
  for (double& x : v) x = rng.normal(0.0, sd);
  return v;
}

/// Boxes stay inside [0.15, 0.85] so small refinement deltas never hit the clamp.
inline TrainingSample random_sample(Rng& rng, int d, int n_proposals, int n_tokens) {
  TrainingSample s;
  s.query = random_vector(rng, d);
  const Box gt = Box::from_center(rng.uniform(0.4, 0.6), rng.uniform(0.4, 0.6), rng.uniform(0.2, 0.35),
                                  rng.uniform(0.2, 0.35));
  s.gt_boxes.push_back(gt);
  for (int i = 0; i < n_proposals; ++i) {
    ProposalCandidate c;
    Box b;
    if (i % 2 == 0) {
      b = Box::from_center(gt.cx() + rng.uniform(-0.03, 0.03), gt.cy() + rng.uniform(-0.03, 0.03),
                           gt.width() * rng.uniform(0.85, 1.15), gt.height() * rng.uniform(0.85, 1.15));
    } else {
      const double side = rng.uniform(0.08, 0.15);
      b = Box::from_center(rng.uniform(0.25, 0.75), rng.uniform(0.25, 0.75), side, side);
    }
    c.scored_box = {b, rng.uniform(0.1, 0.9)};
    for (int t = 0; t < n_tokens; ++t) c.roi_tokens.push_back(random_vector(rng, d));
    c.g_vec = random_vector(rng, d);
    s.proposals.push_back(std::move(c));
  }
  return s;
}

/// Seeded init with the refinement output scaled down to keep deltas small.
inline HeadParams small_head(HeadDims dims, std::uint64_t seed) {
  HeadParams p = HeadParams::init(dims, seed);
  for (double& v : p.ref_w2) v *= 0.1;
  Rng rng(Rng::mix(seed, 99));
  for (double& v : p.b1) v = rng.uniform(-0.1, 0.1);
  for (double& v : p.ref_b1) v = rng.uniform(-0.1, 0.1);
  p.b2[0] = rng.uniform(-0.5, 0.5);
  p.alpha = rng.uniform(0.5, 1.5);
  p.beta = rng.uniform(0.5, 1.5);
  return p;
}

struct GradientCheck {
  double worst_group_error = 0.0;  // max over groups of |a - n| / max(|a|, |n|)
  double worst_entry_error = 0.0;  // max over entries of |a - n| / max(|a|, |n|, floor)
  std::string worst_group;
};

/// Central differences of batch_loss against the analytic gradient, every entry.
inline GradientCheck check_gradient(const HeadParams& params, const std::vector<TrainingSample>& batch,
                                    const FilterLossConfig& cfg, int top_m, double step = 1e-5,
                                    double entry_floor = 1e-6) {
  const HeadParams analytic = grad(params, batch, cfg, top_m);
  std::vector<std::vector<double>> a_groups;
  analytic.for_each_group([&](std::string_view, std::span<const double> v) { a_groups.emplace_back(v.begin(), v.end()); });

  GradientCheck out;
  HeadParams probe = params;
  std::size_t g = 0;
  std::vector<std::pair<std::string, std::vector<double>>> numeric;
  probe.for_each_group([&](std::string_view name, std::span<double> v) {
    numeric.emplace_back(std::string(name), std::vector<double>(v.size()));
  });
  // Values are perturbed through a second traversal so each evaluation sees the probe.
  for (g = 0; g < numeric.size(); ++g) {
    for (std::size_t i = 0; i < numeric[g].second.size(); ++i) {
      double* slot = nullptr;
      std::size_t gi = 0;
      probe.for_each_group([&](std::string_view, std::span<double> v) {
        if (gi++ == g) slot = &v[i];
      });
      const double orig = *slot;
      *slot = orig + step;
      const double up = batch_loss(probe, batch, cfg, top_m);
      *slot = orig - step;
      const double down = batch_loss(probe, batch, cfg, top_m);
      *slot = orig;
      numeric[g].second[i] = (up - down) / (2.0 * step);
    }
  }
  for (g = 0; g < numeric.size(); ++g) {
    const auto& n = numeric[g].second;
    const auto& a = a_groups[g];
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < n.size(); ++i) {
      diff += (a[i] - n[i]) * (a[i] - n[i]);
      na += a[i] * a[i];
      nn += n[i] * n[i];
      const double e = std::abs(a[i] - n[i]) / std::max({std::abs(a[i]), std::abs(n[i]), entry_floor});
      out.worst_entry_error = std::max(out.worst_entry_error, e);
    }
    const double denom = std::max(std::sqrt(na), std::sqrt(nn));
    const double e = denom > 0.0 ? std::sqrt(diff) / denom : 0.0;
    if (e >= out.worst_group_error) {
      out.worst_group_error = e;
      out.worst_group = numeric[g].first;
    }
  }
  return out;
}

}  // namespace rvg::testing
