#include "rvg/feature_grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "rvg/error.hpp"
#include "rvg/text.hpp"

namespace rvg {

FeatureMap::FeatureMap(int height, int width, int dim, double fill)
    : height_(height), width_(width), dim_(dim) {
  if (height <= 0 || width <= 0 || dim <= 0) {
    throw InvalidArgument("FeatureMap: dimensions must be positive");
  }
  data_.assign(static_cast<std::size_t>(height) * width * dim, fill);
}

FeatureMap::FeatureMap(int height, int width, int dim, std::vector<double> data)
    : FeatureMap(height, width, dim) {
  if (data.size() != data_.size()) throw InvalidArgument("FeatureMap: data length != H*W*D");
  data_ = std::move(data);
}

void FeaturePyramid::validate() const {
  if (levels.empty()) throw InvalidArgument("FeaturePyramid: no levels");
  if (strides.size() != levels.size()) throw InvalidArgument("FeaturePyramid: one stride per level");
  for (std::size_t l = 0; l < levels.size(); ++l) {
    if (levels[l].dim() != levels.front().dim()) {
      throw InvalidArgument("FeaturePyramid: levels disagree on channel count");
    }
    if (l > 0 && strides[l] >= strides[l - 1]) {
      throw InvalidArgument("FeaturePyramid: strides must decrease from coarse to fine");
    }
  }
}

int FeaturePyramid::level_for_box(const Box& b, double base) const {
  const int last = static_cast<int>(levels.size()) - 1;
  const double area = std::max(b.area(), 1e-12);
  const int k = static_cast<int>(std::floor(std::log2(std::sqrt(area) * base)));
  return last - std::clamp(k, 0, last);
}

namespace {

// Bilinear read with sample coordinates clamped to the grid's centre lattice.
void bilinear_accumulate(const FeatureMap& map, double y, double x, double weight,
                         std::span<double> out) {
  const double ys = std::clamp(y - 0.5, 0.0, static_cast<double>(map.height() - 1));
  const double xs = std::clamp(x - 0.5, 0.0, static_cast<double>(map.width() - 1));
  const int y0 = static_cast<int>(std::floor(ys));
  const int x0 = static_cast<int>(std::floor(xs));
  const int y1 = std::min(y0 + 1, map.height() - 1);
  const int x1 = std::min(x0 + 1, map.width() - 1);
  const double ly = ys - y0, lx = xs - x0;
  const double w00 = (1 - ly) * (1 - lx), w01 = (1 - ly) * lx;
  const double w10 = ly * (1 - lx), w11 = ly * lx;
  auto c00 = map.cell(y0, x0), c01 = map.cell(y0, x1);
  auto c10 = map.cell(y1, x0), c11 = map.cell(y1, x1);
  for (std::size_t c = 0; c < out.size(); ++c) {
    out[c] += weight * (w00 * c00[c] + w01 * c01[c] + w10 * c10[c] + w11 * c11[c]);
  }
}

}  // namespace

PooledRoi roi_align(const FeatureMap& level, const Box& b, int out_size, int level_index) {
  if (out_size < 1) throw InvalidArgument("roi_align: output size must be >= 1");
  if (!is_valid(b)) throw GeometryError("roi_align: invalid box");
  if (!(b.area() > 0.0)) throw GeometryError("roi_align: zero-area box");

  PooledRoi roi;
  roi.size = out_size;
  roi.dim = level.dim();
  roi.source_box = b;
  roi.level = level_index;
  roi.grid.assign(static_cast<std::size_t>(out_size) * out_size * level.dim(), 0.0);

  constexpr int kSamples = 2;
  const double x0 = b.x1 * level.width(), y0 = b.y1 * level.height();
  const double bin_w = b.width() * level.width() / out_size;
  const double bin_h = b.height() * level.height() / out_size;
  const double weight = 1.0 / (kSamples * kSamples);

  for (int py = 0; py < out_size; ++py) {
    for (int px = 0; px < out_size; ++px) {
      std::span<double> out{roi.grid.data() + (static_cast<std::size_t>(py) * out_size + px) * roi.dim,
                            static_cast<std::size_t>(roi.dim)};
      for (int sy = 0; sy < kSamples; ++sy) {
        const double y = y0 + (py + (sy + 0.5) / kSamples) * bin_h;
        for (int sx = 0; sx < kSamples; ++sx) {
          const double x = x0 + (px + (sx + 0.5) / kSamples) * bin_w;
          bilinear_accumulate(level, y, x, weight, out);
        }
      }
    }
  }
  return roi;
}

std::vector<PooledRoi> roi_align_pyramid(const FeaturePyramid& pyramid, const Box& b, int out_size) {
  std::vector<PooledRoi> rois;
  rois.reserve(pyramid.levels.size());
  for (std::size_t l = 0; l < pyramid.levels.size(); ++l) {
    rois.push_back(roi_align(pyramid.levels[l], b, out_size, static_cast<int>(l)));
  }
  return rois;
}

FeatureVector aggregate_pool(std::span<const PooledRoi> rois) {
  if (rois.empty()) throw InvalidArgument("aggregate_pool: no levels");
  const int dim = rois.front().dim;
  FeatureVector out(static_cast<std::size_t>(dim), 0.0);
  for (const PooledRoi& roi : rois) {
    if (roi.dim != dim) throw InvalidArgument("aggregate_pool: levels disagree on channel count");
    const std::size_t cells = static_cast<std::size_t>(roi.size) * roi.size;
    FeatureVector level_mean(static_cast<std::size_t>(dim), 0.0);
    for (std::size_t i = 0; i < cells; ++i) {
      for (int c = 0; c < dim; ++c) level_mean[c] += roi.grid[i * dim + c];
    }
    for (int c = 0; c < dim; ++c) out[c] += level_mean[c] / static_cast<double>(cells);
  }
  for (double& v : out) v /= static_cast<double>(rois.size());
  return out;
}

void write_feature_matrix(std::ostream& os, std::span<const FeatureVector> rows, int dim) {
  os << "FMAT v1 count=" << rows.size() << " dim=" << dim << '\n';
  for (const FeatureVector& row : rows) {
    if (static_cast<int>(row.size()) != dim) {
      throw InvalidArgument("write_feature_matrix: row length != dim");
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) os << ' ';
      os << text::format_double(row[c]);
    }
    os << '\n';
  }
}

std::vector<FeatureVector> read_feature_matrix(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError(1, "FMAT: missing header");
  const auto head = text::split(line, ' ');
  if (head.size() != 4 || head[0] != "FMAT" || head[1] != "v1") {
    throw ParseError(1, "FMAT: malformed header '" + line + "'");
  }
  const auto count_s = text::key_value(head[2], "count");
  const auto dim_s = text::key_value(head[3], "dim");
  const long long count = count_s ? text::parse_int(*count_s).value_or(-1) : -1;
  const long long dim = dim_s ? text::parse_int(*dim_s).value_or(-1) : -1;
  if (count < 0 || dim < 0) throw ParseError(1, "FMAT: malformed header '" + line + "'");

  std::vector<FeatureVector> rows;
  rows.reserve(static_cast<std::size_t>(count));
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (static_cast<long long>(rows.size()) == count) {
      if (line.empty()) continue;
      throw ParseError(line_no, "FMAT: more rows than count=" + std::to_string(count));
    }
    FeatureVector row;
    if (dim > 0) {
      for (std::string_view tok : text::split(line, ' ')) {
        const auto v = text::parse_double(tok);
        if (!v) throw ParseError(line_no, "FMAT: bad number '" + std::string(tok) + "'");
        if (!std::isfinite(*v)) throw ParseError(line_no, "FMAT: non-finite value");
        row.push_back(*v);
      }
    } else if (!line.empty()) {
      throw ParseError(line_no, "FMAT: expected empty row for dim=0");
    }
    if (static_cast<long long>(row.size()) != dim) {
      throw ParseError(line_no, "FMAT: row has " + std::to_string(row.size()) + " values, expected " +
                                    std::to_string(dim));
    }
    rows.push_back(std::move(row));
  }
  if (static_cast<long long>(rows.size()) != count) {
    throw ParseError(line_no, "FMAT: expected " + std::to_string(count) + " rows, found " +
                                  std::to_string(rows.size()));
  }
  return rows;
}

void write_feature_matrix_file(const std::string& path, std::span<const FeatureVector> rows, int dim) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_feature_matrix(os, rows, dim);
}

std::vector<FeatureVector> read_feature_matrix_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open '" + path + "'");
  return read_feature_matrix(is);
}

}  // namespace rvg
