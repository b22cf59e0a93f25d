#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "rvg/geometry.hpp"

namespace rvg {

using FeatureVector = std::vector<double>;

/// Dense H x W x D grid, row-major with channels innermost.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(int height, int width, int dim, double fill = 0.0);
  FeatureMap(int height, int width, int dim, std::vector<double> data);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int dim() const noexcept { return dim_; }

  std::span<double> cell(int y, int x) noexcept {
    return {data_.data() + offset(y, x), static_cast<std::size_t>(dim_)};
  }
  std::span<const double> cell(int y, int x) const noexcept {
    return {data_.data() + offset(y, x), static_cast<std::size_t>(dim_)};
  }

  const std::vector<double>& data() const noexcept { return data_; }
  std::vector<double>& data() noexcept { return data_; }

 private:
  std::size_t offset(int y, int x) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * dim_;
  }

  int height_ = 0;
  int width_ = 0;
  int dim_ = 0;
  std::vector<double> data_;
};

/// Levels ordered coarse to fine; strides[l] is the downscale factor of levels[l].
struct FeaturePyramid {
  std::vector<FeatureMap> levels;
  std::vector<int> strides;

  int dim() const noexcept { return levels.empty() ? 0 : levels.front().dim(); }

  /// Throws InvalidArgument unless non-empty, dims agree and strides shrink toward fine levels.
  void validate() const;

  /// Single-level assignment floor(log2(sqrt(area) * base)) clipped to the level range.
  /// Level 0 is the coarsest, so larger boxes map to lower indices.
  int level_for_box(const Box& b, double base) const;
};

struct PooledRoi {
  int size = 0;  // P
  int dim = 0;
  std::vector<double> grid;  // P x P x dim
  Box source_box;
  int level = 0;

  std::span<const double> cell(int py, int px) const noexcept {
    return {grid.data() + (static_cast<std::size_t>(py) * size + px) * dim,
            static_cast<std::size_t>(dim)};
  }
};

inline constexpr int kDefaultRoiSize = 7;

/// ROI-align: every output cell averages a 2x2 grid of bilinear samples. Feature
/// cell (y, x) is centred at continuous coordinate (y + 0.5, x + 0.5).
/// Throws GeometryError on a zero-area box.
PooledRoi roi_align(const FeatureMap& level, const Box& b, int out_size = kDefaultRoiSize,
                    int level_index = 0);

/// roi_align on every pyramid level.
std::vector<PooledRoi> roi_align_pyramid(const FeaturePyramid& pyramid, const Box& b,
                                         int out_size = kDefaultRoiSize);

/// Spatial mean per level, then mean across levels.
FeatureVector aggregate_pool(std::span<const PooledRoi> rois);

// FMAT v1 text matrices.
void write_feature_matrix(std::ostream& os, std::span<const FeatureVector> rows, int dim);
std::vector<FeatureVector> read_feature_matrix(std::istream& is);
void write_feature_matrix_file(const std::string& path, std::span<const FeatureVector> rows, int dim);
std::vector<FeatureVector> read_feature_matrix_file(const std::string& path);

}  // namespace rvg
