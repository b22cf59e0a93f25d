#include "rvg/mask.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>

#include "rvg/error.hpp"
#include "rvg/text.hpp"

namespace rvg {

MaskFrame rasterize_box(const Box& b, int width, int height) {
  MaskFrame m(width, height);
  for (int y = 0; y < height; ++y) {
    const double cy = (y + 0.5) / height;
    if (cy < b.y1 || cy > b.y2) continue;
    for (int x = 0; x < width; ++x) {
      const double cx = (x + 0.5) / width;
      if (cx >= b.x1 && cx <= b.x2) m.at(y, x) = 1.0;
    }
  }
  return m;
}

void write_mask_video(std::ostream& os, const MaskVideo& video) {
  const int w = video.frames.empty() ? 0 : video.frames.front().width;
  const int h = video.frames.empty() ? 0 : video.frames.front().height;
  os << "MASK v1 w=" << w << " h=" << h << " frames=" << video.frames.size() << '\n';
  for (std::size_t t = 0; t < video.frames.size(); ++t) {
    const MaskFrame& f = video.frames[t];
    if (f.width != w || f.height != h) throw InvalidArgument("write_mask_video: frame size mismatch");
    if (t > 0) os << '\n';
    std::string row(static_cast<std::size_t>(w), '0');
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) row[x] = f.on(y, x) ? '1' : '0';
      os << row << '\n';
    }
  }
}

MaskVideo read_mask_video(std::istream& is, std::string video_id) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError(1, "MASK: missing header");
  const auto head = text::split(line, ' ');
  auto field = [&](std::size_t i, std::string_view key) -> long long {
    const auto v = head.size() == 5 ? text::key_value(head[i], key) : std::nullopt;
    const auto n = v ? text::parse_int(*v) : std::nullopt;
    if (!n || *n < 0) throw ParseError(1, "MASK: malformed header '" + line + "'");
    return *n;
  };
  if (head.size() != 5 || head[0] != "MASK" || head[1] != "v1") {
    throw ParseError(1, "MASK: malformed header '" + line + "'");
  }
  const int w = static_cast<int>(field(2, "w"));
  const int h = static_cast<int>(field(3, "h"));
  const long long frames = field(4, "frames");

  MaskVideo video;
  video.video_id = std::move(video_id);
  std::size_t line_no = 1;
  auto next_line = [&]() -> bool {
    if (!std::getline(is, line)) return false;
    ++line_no;
    return true;
  };
  for (long long t = 0; t < frames; ++t) {
    if (t > 0) {
      if (!next_line()) throw ParseError(line_no, "MASK: truncated file");
      if (!line.empty()) throw ParseError(line_no, "MASK: expected blank separator line");
    }
    MaskFrame f(w, h);
    for (int y = 0; y < h; ++y) {
      if (!next_line()) throw ParseError(line_no, "MASK: truncated file");
      if (static_cast<int>(line.size()) != w) {
        throw ParseError(line_no, "MASK: row has " + std::to_string(line.size()) + " chars, expected " +
                                      std::to_string(w));
      }
      for (int x = 0; x < w; ++x) {
        if (line[x] != '0' && line[x] != '1') throw ParseError(line_no, "MASK: invalid character");
        f.at(y, x) = line[x] == '1' ? 1.0 : 0.0;
      }
    }
    video.frames.push_back(std::move(f));
  }
  while (next_line()) {
    if (!line.empty()) throw ParseError(line_no, "MASK: trailing data");
  }
  return video;
}

void write_mask_file(const std::string& path, const MaskVideo& video) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_mask_video(os, video);
}

MaskVideo read_mask_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open '" + path + "'");
  return read_mask_video(is, std::filesystem::path(path).stem().string());
}

}  // namespace rvg
