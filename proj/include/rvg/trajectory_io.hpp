#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rvg/tsf.hpp"

namespace rvg {

/// One JSON object per point:
/// {"video_id":..,"target_id":..,"frame":..,"box":[x1,y1,x2,y2],"score":..}
/// Written sorted by (video_id, target_id, frame). Reading groups lines back
/// into trajectories in that same order.
void write_trajectories(std::ostream& os, std::span<const Trajectory> trajs);
std::vector<Trajectory> read_trajectories(std::istream& is);
void write_trajectories_file(const std::string& path, std::span<const Trajectory> trajs);
std::vector<Trajectory> read_trajectories_file(const std::string& path);

struct QaRecord {
  std::string video_id;
  std::string question;
  std::string answer;
  std::string target_id;
};

void write_qa_manifest(std::ostream& os, std::span<const QaRecord> records);
std::vector<QaRecord> read_qa_manifest(std::istream& is);

}  // namespace rvg
