#include "rvg/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "rvg/error.hpp"
#include "rvg/text.hpp"

namespace rvg {

namespace {

void check_dims(const MaskFrame& a, const MaskFrame& b, const char* op) {
  if (a.width != b.width || a.height != b.height) {
    throw InvalidArgument(std::string(op) + ": mask dimensions differ");
  }
}

// Pixels of `mask` within `radius` of a set pixel of `marks`.
std::vector<bool> dilate(const std::vector<bool>& marks, int width, int height, int radius) {
  std::vector<bool> out(marks.size(), false);
  const int r2 = radius * radius;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (!marks[static_cast<std::size_t>(y) * width + x]) continue;
      for (int dy = -radius; dy <= radius; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= height) continue;
        for (int dx = -radius; dx <= radius; ++dx) {
          const int xx = x + dx;
          if (xx < 0 || xx >= width || dx * dx + dy * dy > r2) continue;
          out[static_cast<std::size_t>(yy) * width + xx] = true;
        }
      }
    }
  }
  return out;
}

}  // namespace

double j_measure(const MaskFrame& pred, const MaskFrame& gt) {
  check_dims(pred, gt, "j_measure");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    const bool p = pred.values[i] > 0.5, g = gt.values[i] > 0.5;
    inter += p && g;
    uni += p || g;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<bool> boundary_map(const MaskFrame& mask) {
  const int w = mask.width, h = mask.height;
  std::vector<bool> out(static_cast<std::size_t>(w) * h, false);
  auto on = [&](int y, int x) { return y >= 0 && y < h && x >= 0 && x < w && mask.on(y, x); };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.on(y, x)) continue;
      if (!on(y - 1, x) || !on(y + 1, x) || !on(y, x - 1) || !on(y, x + 1)) {
        out[static_cast<std::size_t>(y) * w + x] = true;
      }
    }
  }
  return out;
}

int boundary_tolerance(int width, int height, double radius_frac) {
  const double diag = std::sqrt(static_cast<double>(width) * width + static_cast<double>(height) * height);
  return static_cast<int>(std::ceil(radius_frac * diag));
}

double f_measure(const MaskFrame& pred, const MaskFrame& gt, double radius_frac) {
  check_dims(pred, gt, "f_measure");
  const auto pb = boundary_map(pred);
  const auto gb = boundary_map(gt);
  const auto n_pred = std::count(pb.begin(), pb.end(), true);
  const auto n_gt = std::count(gb.begin(), gb.end(), true);
  if (n_pred == 0 && n_gt == 0) return 1.0;
  if (n_pred == 0 || n_gt == 0) return 0.0;

  const int r = boundary_tolerance(pred.width, pred.height, radius_frac);
  const auto gt_zone = dilate(gb, gt.width, gt.height, r);
  const auto pred_zone = dilate(pb, pred.width, pred.height, r);
  std::size_t pred_hit = 0, gt_hit = 0;
  for (std::size_t i = 0; i < pb.size(); ++i) {
    pred_hit += pb[i] && gt_zone[i];
    gt_hit += gb[i] && pred_zone[i];
  }
  const double precision = static_cast<double>(pred_hit) / static_cast<double>(n_pred);
  const double recall = static_cast<double>(gt_hit) / static_cast<double>(n_gt);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

SequenceScore sequence_eval(const MaskVideo& pred, const MaskVideo& gt) {
  if (pred.frames.size() != gt.frames.size()) {
    throw InvalidArgument("sequence_eval: frame count mismatch (" + std::to_string(pred.frames.size()) +
                          " vs " + std::to_string(gt.frames.size()) + ")");
  }
  if (gt.frames.empty()) throw InvalidArgument("sequence_eval: no annotated frames");
  double j = 0.0, f = 0.0;
  for (std::size_t t = 0; t < gt.frames.size(); ++t) {
    j += j_measure(pred.frames[t], gt.frames[t]);
    f += f_measure(pred.frames[t], gt.frames[t]);
  }
  const double n = static_cast<double>(gt.frames.size());
  SequenceScore s{gt.video_id.empty() ? pred.video_id : gt.video_id, j / n, f / n, 0.0};
  s.jf = 0.5 * (s.j + s.f);
  return s;
}

MetricReport aggregate(std::vector<SequenceScore> sequences) {
  MetricReport r;
  r.sequences = std::move(sequences);
  if (r.sequences.empty()) return r;
  for (const auto& s : r.sequences) {
    r.mean_j += s.j;
    r.mean_f += s.f;
  }
  r.mean_j /= static_cast<double>(r.sequences.size());
  r.mean_f /= static_cast<double>(r.sequences.size());
  r.mean_jf = 0.5 * (r.mean_j + r.mean_f);
  return r;
}

void write_metric_csv(std::ostream& os, const MetricReport& report) {
  os << "video_id,J,F,JF\n";
  auto row = [&](const std::string& id, double j, double f, double jf) {
    os << id << ',' << text::format_fixed(j, 4) << ',' << text::format_fixed(f, 4) << ','
       << text::format_fixed(jf, 4) << '\n';
  };
  for (const auto& s : report.sequences) row(s.video_id, s.j, s.f, s.jf);
  row("ALL", report.mean_j, report.mean_f, report.mean_jf);
}

double miou(std::span<const double> ious) {
  if (ious.empty()) throw InvalidArgument("miou: empty input");
  return std::accumulate(ious.begin(), ious.end(), 0.0) / static_cast<double>(ious.size());
}

double oracle_recall(std::span<const FrameProposals> frames, std::span<const std::vector<Box>> gt,
                     std::size_t topk, double iou_thresh) {
  if (frames.size() != gt.size()) throw InvalidArgument("oracle_recall: frame count mismatch");
  std::size_t total = 0, covered = 0;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const FrameProposals& props = frames[f];
    if (props.objectness.size() != props.boxes.size()) {
      throw InvalidArgument("oracle_recall: one objectness score per proposal box");
    }
    std::vector<std::size_t> order(props.boxes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return props.objectness[a] > props.objectness[b];
    });
    order.resize(std::min(order.size(), topk));
    for (const Box& g : gt[f]) {
      ++total;
      covered += std::any_of(order.begin(), order.end(),
                             [&](std::size_t i) { return iou(props.boxes[i], g) > iou_thresh; });
    }
  }
  if (total == 0) throw InvalidArgument("oracle_recall: no ground-truth boxes");
  return static_cast<double>(covered) / static_cast<double>(total);
}

using ojson = nlohmann::ordered_json;

void write_proposals(std::ostream& os, std::span<const ProposalRecord> records) {
  for (const auto& r : records) {
    ojson line;
    line["video_id"] = r.video_id;
    line["frame"] = r.frame;
    ojson boxes = ojson::array();
    for (const Box& b : r.proposals.boxes) boxes.push_back({b.x1, b.y1, b.x2, b.y2});
    line["boxes"] = std::move(boxes);
    line["objectness"] = r.proposals.objectness;
    os << line.dump() << '\n';
  }
}

std::vector<ProposalRecord> read_proposals(std::istream& is) {
  std::vector<ProposalRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const ojson j = ojson::parse(line);
      ProposalRecord r;
      r.video_id = j.at("video_id").get<std::string>();
      r.frame = j.at("frame").get<int>();
      for (const auto& b : j.at("boxes")) {
        if (!b.is_array() || b.size() != 4) throw ParseError(line_no, "box must have 4 numbers");
        r.proposals.boxes.push_back(
            {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()});
      }
      if (j.contains("objectness")) {
        r.proposals.objectness = j.at("objectness").get<std::vector<double>>();
      } else {
        r.proposals.objectness.assign(r.proposals.boxes.size(), 1.0);
      }
      if (r.proposals.objectness.size() != r.proposals.boxes.size()) {
        throw ParseError(line_no, "objectness length differs from box count");
      }
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, std::string("proposals: ") + e.what());
    }
  }
  return out;
}

std::vector<ProposalRecord> read_proposals_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open '" + path + "'");
  return read_proposals(is);
}

}  // namespace rvg
