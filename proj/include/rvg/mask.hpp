#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rvg/geometry.hpp"

namespace rvg {

/// Row-major mask: binary {0,1} for ground truth, probabilities in [0,1] for predictions.
struct MaskFrame {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  MaskFrame() = default;
  MaskFrame(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
  double at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
  bool on(int y, int x) const { return at(y, x) > 0.5; }

  friend bool operator==(const MaskFrame&, const MaskFrame&) = default;
};

struct MaskVideo {
  std::string video_id;
  std::vector<MaskFrame> frames;

  friend bool operator==(const MaskVideo&, const MaskVideo&) = default;
};

/// Pixels whose centres fall inside the normalized box are set to 1.
MaskFrame rasterize_box(const Box& b, int width, int height);

// MASK v1: header "MASK v1 w=<W> h=<H> frames=<T>", then T blocks of H lines of
// W characters from {0,1}, blocks separated by one blank line.
void write_mask_video(std::ostream& os, const MaskVideo& video);
MaskVideo read_mask_video(std::istream& is, std::string video_id = {});
void write_mask_file(const std::string& path, const MaskVideo& video);
/// video_id defaults to the file stem.
MaskVideo read_mask_file(const std::string& path);

}  // namespace rvg
