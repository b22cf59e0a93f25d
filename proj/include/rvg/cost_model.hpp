#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace rvg {

struct ScenarioFlags {
  bool fast_motion = false;
  bool occlusion = false;
  bool small_target = false;
  bool crowded = false;
  bool short_simple = false;
};

struct Scenario {
  long long targets = 0;  // n
  long long frames = 0;   // T
  ScenarioFlags flags;
};

/// How a component's unit count scales with the scenario.
enum class CountKind { once, per_target_frame, per_target, per_token };

struct CostEntry {
  std::string name;
  double unit_seconds = 0.0;
  CountKind count = CountKind::once;
  int tokens_per_target = 0;  // per_token only
};

using CostTable = std::vector<CostEntry>;

/// Tracking-feature overhead on a single A100-class GPU. The language-model
/// token cost is the midpoint of a 0.5-1 ms/token range.
const CostTable& default_cost_table();

struct ComponentCost {
  std::string name;
  double seconds = 0.0;
};

double unit_count(const CostEntry& entry, const Scenario& s);

std::vector<ComponentCost> component_breakdown(const Scenario& s,
                                               const CostTable& table = default_cost_table());

/// Closed form 0.093 + 0.020 * n * T seconds, computed in integer milliseconds.
double total_overhead(const Scenario& s);

enum class TsfRecommendation { off, enable_if_accuracy_critical, enable };

/// Strongest applicable rule wins: enable > enable_if_accuracy_critical > off.
TsfRecommendation recommend_tsf(const Scenario& s);

std::string_view to_string(TsfRecommendation r);

/// Comma separated flag names (fast_motion, occlusion, small_target, crowded, short_simple).
ScenarioFlags parse_flags(std::string_view csv);

}  // namespace rvg
