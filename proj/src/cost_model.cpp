#include "rvg/cost_model.hpp"

#include <algorithm>

#include "rvg/error.hpp"
#include "rvg/text.hpp"

namespace rvg {

const CostTable& default_cost_table() {
  static const CostTable table = {
      {"first_frame_detection", 0.090, CountKind::once, 0},
      {"tracking", 0.018, CountKind::per_target_frame, 0},
      {"crop_features", 0.002, CountKind::per_target_frame, 0},
      {"clustering", 0.0, CountKind::per_target, 0},
      {"projection", 0.0001, CountKind::per_token, 4},
      {"llm_extra_tokens", 0.00075, CountKind::per_token, 4},
  };
  return table;
}

double unit_count(const CostEntry& entry, const Scenario& s) {
  switch (entry.count) {
    case CountKind::once: return 1.0;
    case CountKind::per_target_frame: return static_cast<double>(s.targets * s.frames);
    case CountKind::per_target: return static_cast<double>(s.targets);
    case CountKind::per_token: return static_cast<double>(s.targets * entry.tokens_per_target);
  }
  return 0.0;
}

std::vector<ComponentCost> component_breakdown(const Scenario& s, const CostTable& table) {
  if (s.targets < 0 || s.frames < 0) throw InvalidArgument("scenario: negative targets or frames");
  std::vector<ComponentCost> out;
  out.reserve(table.size());
  for (const CostEntry& e : table) out.push_back({e.name, e.unit_seconds * unit_count(e, s)});
  return out;
}

double total_overhead(const Scenario& s) {
  if (s.targets < 0 || s.frames < 0) throw InvalidArgument("scenario: negative targets or frames");
  const long long millis = 93 + 20 * s.targets * s.frames;
  return static_cast<double>(millis) / 1000.0;
}

TsfRecommendation recommend_tsf(const Scenario& s) {
  const ScenarioFlags& f = s.flags;
  if (f.occlusion || f.crowded) return TsfRecommendation::enable;
  if (f.fast_motion || f.small_target) return TsfRecommendation::enable_if_accuracy_critical;
  return TsfRecommendation::off;
}

std::string_view to_string(TsfRecommendation r) {
  switch (r) {
    case TsfRecommendation::off: return "off";
    case TsfRecommendation::enable_if_accuracy_critical: return "enable_if_accuracy_critical";
    case TsfRecommendation::enable: return "enable";
  }
  return "off";
}

ScenarioFlags parse_flags(std::string_view csv) {
  ScenarioFlags f;
  if (csv.empty()) return f;
  for (std::string_view name : text::split(csv, ',')) {
    if (name == "fast_motion") f.fast_motion = true;
    else if (name == "occlusion") f.occlusion = true;
    else if (name == "small_target") f.small_target = true;
    else if (name == "crowded") f.crowded = true;
    else if (name == "short_simple") f.short_simple = true;
    else if (!name.empty()) throw InvalidArgument("unknown scenario flag '" + std::string(name) + "'");
  }
  return f;
}

}  // namespace rvg
