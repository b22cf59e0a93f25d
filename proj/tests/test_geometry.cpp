#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rvg/error.hpp"
#include "rvg/geometry.hpp"
#include "rvg/random.hpp"
#include "oracles.hpp"

using namespace rvg;
using rvg::testing::brute_force_nms;

namespace {

Box random_box(Rng& rng) {
  const double x1 = rng.uniform(0.0, 0.9), y1 = rng.uniform(0.0, 0.9);
  return {x1, y1, x1 + rng.uniform(0.01, 1.0 - x1), y1 + rng.uniform(0.01, 1.0 - y1)};
}

}  // namespace

TEST(Iou, HandValues) {
  EXPECT_DOUBLE_EQ(iou({0, 0, 1, 1}, {0, 0, 1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(iou({0, 0, 0.5, 1}, {0.6, 0, 1, 1}), 0.0);
  EXPECT_NEAR(iou({0, 0, 1, 1}, {0.5, 0, 1.5, 1}), 1.0 / 3.0, 1e-15);
}

TEST(Iou, DegenerateUnionIsZero) {
  EXPECT_EQ(iou({0.3, 0.3, 0.3, 0.3}, {0.3, 0.3, 0.3, 0.3}), 0.0);
}

TEST(Giou, HandValues) {
  EXPECT_DOUBLE_EQ(giou({0, 0, 1, 1}, {0, 0, 1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(giou({0, 0, 1, 1}, {1, 1, 2, 2}), -0.5);
}

TEST(Giou, ZeroAreaThrows) {
  EXPECT_THROW(giou({0.2, 0.2, 0.2, 0.5}, {0, 0, 1, 1}), GeometryError);
}

TEST(Giou, RandomPairBounds) {
  Rng rng(11);
  for (int i = 0; i < 20000; ++i) {
    const Box a = random_box(rng), b = random_box(rng);
    const double g = giou(a, b);
    EXPECT_GT(g, -1.0);
    EXPECT_LE(g, 1.0);
    EXPECT_LE(g, iou(a, b) + 1e-15);
    EXPECT_NEAR(g, giou(b, a), 1e-12);
    EXPECT_GE(iou(a, b), 0.0);
    EXPECT_LE(iou(a, b), 1.0);
  }
}

TEST(Giou, GradientMatchesFiniteDifference) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Box p = random_box(rng), t = random_box(rng);
    const GiouGradient g = giou_with_gradient(p, t);
    EXPECT_NEAR(g.value, giou(p, t), 1e-14);
    for (int c = 0; c < 4; ++c) {
      auto shifted = [&](double h) {
        auto v = p.coords();
        v[c] += h;
        return giou({v[0], v[1], v[2], v[3]}, t);
      };
      const double h = 1e-6;
      const double fd = (shifted(h) - shifted(-h)) / (2 * h);
      // Kinks sit where edges coincide; skip the rare sample that straddles one.
      if (std::abs(fd - g.d_pred[c]) > 1e-4) {
        const double left = (shifted(0) - shifted(-h)) / h, right = (shifted(h) - shifted(0)) / h;
        EXPECT_GT(std::abs(left - right), 1e-4) << "trial " << trial << " coord " << c;
      }
    }
  }
}

TEST(Nms, Examples) {
  std::vector<ScoredBox> one{{{0.1, 0.1, 0.4, 0.4}, 0.7}};
  EXPECT_EQ(nms(one, 0.5), one);

  std::vector<ScoredBox> coincident{{{0.1, 0.1, 0.4, 0.4}, 0.8}, {{0.1, 0.1, 0.4, 0.4}, 0.9}};
  const auto kept = nms(coincident, 0.5);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].score, 0.9);

  std::vector<ScoredBox> disjoint{{{0.0, 0.0, 0.2, 0.2}, 0.3}, {{0.5, 0.5, 0.9, 0.9}, 0.6}};
  const auto both = nms(disjoint, 0.5);
  ASSERT_EQ(both.size(), 2u);
  EXPECT_EQ(both[0].score, 0.6);
  EXPECT_EQ(both[1].score, 0.3);

  EXPECT_TRUE(nms(std::vector<ScoredBox>{}, 0.5).empty());
}

TEST(Nms, TiesKeepInputOrder) {
  std::vector<ScoredBox> c{{{0.0, 0.0, 0.2, 0.2}, 0.5}, {{0.5, 0.5, 0.9, 0.9}, 0.5}, {{0.3, 0.0, 0.4, 0.1}, 0.5}};
  EXPECT_EQ(nms_indices(c, 0.5), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Nms, MatchesBruteForceAndInvariants) {
  Rng rng(2024);
  for (int inst = 0; inst < 300; ++inst) {
    const int n = static_cast<int>(rng.index(51));
    std::vector<ScoredBox> c;
    for (int i = 0; i < n; ++i) {
      // Quantized scores force ties.
      c.push_back({random_box(rng), std::floor(rng.uniform() * 10) / 10});
    }
    const double thr = rng.uniform();
    const auto idx = nms_indices(c, thr);
    EXPECT_EQ(idx, brute_force_nms(c, thr));
    const auto kept = nms(c, thr);
    ASSERT_EQ(kept.size(), idx.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
      EXPECT_EQ(kept[i], c[idx[i]]);
      for (std::size_t j = i + 1; j < kept.size(); ++j) EXPECT_LE(iou(kept[i].box, kept[j].box), thr);
    }
    EXPECT_EQ(nms(kept, thr), kept);
  }
}

TEST(ApplyDelta, Examples) {
  const Box b{0.2, 0.2, 0.4, 0.4};
  EXPECT_EQ(apply_delta(b, {}), b);
  const Box shifted = apply_delta(b, {0.1, 0, 0, 0});
  EXPECT_NEAR(shifted.x1, 0.3, 1e-15);
  EXPECT_NEAR(shifted.x2, 0.5, 1e-15);
  EXPECT_NEAR(shifted.y1, 0.2, 1e-15);
  EXPECT_NEAR(shifted.y2, 0.4, 1e-15);
  EXPECT_EQ(apply_delta({0.7, 0.7, 0.9, 0.9}, {0.5, 0, 0, 0}).x2, 1.0);
}

TEST(ApplyDelta, NegativeSizeCollapsesToCentre) {
  const Box r = apply_delta({0.2, 0.2, 0.4, 0.4}, {0, 0, -0.5, 0});
  EXPECT_EQ(r.x1, r.x2);
  EXPECT_NEAR(r.x1, 0.3, 1e-15);
  EXPECT_TRUE(is_valid(r));
}

TEST(ApplyDelta, ZeroDeltaIsIdentityOnRandomBoxes) {
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    const Box b = random_box(rng);
    const Box r = apply_delta(b, {});
    EXPECT_NEAR(r.x1, b.x1, 1e-15);
    EXPECT_NEAR(r.y1, b.y1, 1e-15);
    EXPECT_NEAR(r.x2, b.x2, 1e-15);
    EXPECT_NEAR(r.y2, b.y2, 1e-15);
  }
}

TEST(ApplyDelta, JacobianMatchesFiniteDifference) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const Box b = random_box(rng);
    const BoxDelta d{rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1)};
    const auto jac = apply_delta_jacobian(b, d);
    for (int c = 0; c < 4; ++c) {
      auto at = [&](double h) {
        BoxDelta e = d;
        double* f[] = {&e.dcx, &e.dcy, &e.dw, &e.dh};
        *f[c] += h;
        return apply_delta(b, e).coords();
      };
      const double h = 1e-7;
      const auto hi = at(h), lo = at(-h);
      for (int r = 0; r < 4; ++r) {
        const double fd = (hi[r] - lo[r]) / (2 * h);
        // Clamp boundaries are kinks; only compare away from them.
        if (hi[r] > 0.0 && hi[r] < 1.0 && lo[r] > 0.0 && lo[r] < 1.0) EXPECT_NEAR(jac[r][c], fd, 1e-6);
      }
    }
  }
}

TEST(ClampBox, IntoUnitSquare) {
  const Box c = clamp_box({-0.2, 0.5, 1.3, 0.4});
  EXPECT_EQ(c.x1, 0.0);
  EXPECT_EQ(c.x2, 1.0);
  EXPECT_EQ(c.y1, c.y2);
  EXPECT_TRUE(is_valid(c));
}
