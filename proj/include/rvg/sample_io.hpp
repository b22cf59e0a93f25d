#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rvg/filtration_head.hpp"

namespace rvg {

/// Training/inference bundle, one JSON object per line:
/// {"id":..,"query":[..],"gt":[[x1,y1,x2,y2],..],
///  "proposals":[{"box":[..],"score":..,"g":[..],"tokens":[[..],..]},..]}
struct SampleRecord {
  std::string id;
  TrainingSample sample;
};

void write_samples(std::ostream& os, std::span<const SampleRecord> records);
std::vector<SampleRecord> read_samples(std::istream& is);
void write_samples_file(const std::string& path, std::span<const SampleRecord> records);
std::vector<SampleRecord> read_samples_file(const std::string& path);

/// One line per sample: {"id":..,"decisions":[{"index":..,"s_lang":..,"s_final":..,"box":[..],"selected":..},..]}
void write_decisions(std::ostream& os, const std::string& id, std::span<const FilterDecision> decisions);

}  // namespace rvg
