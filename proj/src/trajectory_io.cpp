#include "rvg/trajectory_io.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <tuple>

#include <json.hpp>

#include "rvg/error.hpp"

namespace rvg {

using ojson = nlohmann::ordered_json;

void write_trajectories(std::ostream& os, std::span<const Trajectory> trajs) {
  std::vector<const Trajectory*> order;
  for (const Trajectory& t : trajs) order.push_back(&t);
  std::stable_sort(order.begin(), order.end(), [](const Trajectory* a, const Trajectory* b) {
    return std::tie(a->video_id, a->target_id) < std::tie(b->video_id, b->target_id);
  });
  for (const Trajectory* t : order) {
    for (const TrajectoryPoint& p : t->points) {
      ojson line;
      line["video_id"] = t->video_id;
      line["target_id"] = t->target_id;
      line["frame"] = p.frame;
      line["box"] = {p.box.x1, p.box.y1, p.box.x2, p.box.y2};
      line["score"] = p.confidence;
      os << line.dump() << '\n';
    }
  }
}

std::vector<Trajectory> read_trajectories(std::istream& is) {
  std::vector<Trajectory> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const ojson j = ojson::parse(line);
      const std::string video = j.at("video_id").get<std::string>();
      const std::string target = j.at("target_id").get<std::string>();
      const auto& box = j.at("box");
      if (!box.is_array() || box.size() != 4) throw ParseError(line_no, "box must have 4 numbers");
      TrajectoryPoint p;
      p.frame = j.at("frame").get<int>();
      p.box = {box[0].get<double>(), box[1].get<double>(), box[2].get<double>(), box[3].get<double>()};
      p.confidence = j.at("score").get<double>();
      if (!is_valid(p.box)) throw ParseError(line_no, "invalid box");
      if (p.frame < 0) throw ParseError(line_no, "negative frame");

      if (out.empty() || out.back().video_id != video || out.back().target_id != target) {
        out.push_back(Trajectory{video, target, {}, false});
      } else if (p.frame <= out.back().points.back().frame) {
        throw ParseError(line_no, "frames must be strictly increasing within a trajectory");
      }
      out.back().points.push_back(p);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, std::string("trajectory: ") + e.what());
    }
  }
  return out;
}

void write_trajectories_file(const std::string& path, std::span<const Trajectory> trajs) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_trajectories(os, trajs);
}

std::vector<Trajectory> read_trajectories_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open '" + path + "'");
  return read_trajectories(is);
}

void write_qa_manifest(std::ostream& os, std::span<const QaRecord> records) {
  for (const QaRecord& r : records) {
    ojson line;
    line["video_id"] = r.video_id;
    line["question"] = r.question;
    line["answer"] = r.answer;
    line["target_id"] = r.target_id;
    os << line.dump() << '\n';
  }
}

std::vector<QaRecord> read_qa_manifest(std::istream& is) {
  std::vector<QaRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const ojson j = ojson::parse(line);
      out.push_back({j.at("video_id").get<std::string>(), j.at("question").get<std::string>(),
                     j.at("answer").get<std::string>(), j.at("target_id").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, std::string("qa manifest: ") + e.what());
    }
  }
  return out;
}

}  // namespace rvg
