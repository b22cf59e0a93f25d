#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "rvg/filtration_head.hpp"
#include "rvg/synth.hpp"
#include "rvg/tsf.hpp"

namespace rvg {

/// How tracked-feature tokens enter the synthetic pipeline. Both non-none modes
/// average representative crop tokens into the query (a stand-in for extra
/// language-model tokens); train_and_inference also does so for held-out scenes.
enum class TsfMode { none, train_only, train_and_inference };

TsfMode parse_tsf_mode(std::string_view name);
std::string_view to_string(TsfMode mode);

struct CorruptionSetting {
  CorruptionKind kind = CorruptionKind::none;
  double level = 0.0;
};

/// Full-batch settings for synthetic ablations. The box term is down-weighted
/// (0.01): in unit-square coordinates its curvature is roughly two orders of
/// magnitude above the classification term, and a single fixed step size that
/// moves the scorer diverges on the refinement branch at lambda_box = 2.
TrainConfig default_ablation_training();

struct ExperimentGrid {
  std::vector<TsfMode> tsf_modes{TsfMode::none, TsfMode::train_only, TsfMode::train_and_inference};
  std::vector<bool> box_prompt{false, true};
  std::vector<CorruptionSetting> corruptions{{CorruptionKind::none, 0.0}};
  std::uint64_t seed = 7;
  int train_scenes = 200;
  int test_scenes = 50;
  SceneConfig scenes;  // seed and count are taken from the grid
  TrainConfig train = default_ablation_training();  // dims follow the scene config
};

/// Throws InvalidArgument on an empty axis or non-positive scene counts.
void validate(const ExperimentGrid& grid);

struct AblationRow {
  TsfMode tsf_mode = TsfMode::none;
  bool box_prompt = false;
  CorruptionKind corruption = CorruptionKind::none;
  double level = 0.0;
  double sel_acc = 0.0;     // box-IoU selection accuracy on held-out scenes
  double recall = 0.0;      // any selected refined box with IoU > 0.5
  std::uint64_t seed = 0;

  friend bool operator==(const AblationRow&, const AblationRow&) = default;
};

struct AblationResult {
  std::vector<AblationRow> rows;  // grid order: tsf mode, then box prompt, then corruption
  double baseline_sel_acc = 0.0;  // highest-objectness proposal
  double baseline_recall = 0.0;   // any of the top_m proposals by objectness
};

/// Held-out scene i is generated with index train_scenes + i under the same seed,
/// so identity prototypes and the query map are shared with training.
AblationResult run_ablation(const ExperimentGrid& grid);

/// Per-scene inputs reused by every grid cell.
struct PreparedScene {
  SyntheticScene scene;
  std::vector<ProposalCandidate> candidates;
};
std::vector<PreparedScene> prepare_scenes(const SceneConfig& config, int first, int count);

/// Query used for one scene under a TSF mode and training-trajectory corruption.
QueryEmbedding cell_query(const PreparedScene& prepared, const SceneConfig& config, bool use_tsf,
                          const CorruptionSetting& corruption, std::uint64_t seed);

/// True when the highest-s_final selected refined box has IoU > 0.5 with the target.
bool top_selection_hit(std::span<const FilterDecision> decisions, const Box& target);

// results.csv
inline constexpr std::string_view kResultsHeader = "tsf_mode,box_prompt,corruption,level,sel_acc,recall@0.5,seed";
void write_results_csv(std::ostream& os, std::span<const AblationRow> rows);
std::vector<AblationRow> read_results_csv(std::istream& is);

enum class ReportFormat { table, markdown, csv };
ReportFormat parse_report_format(std::string_view name);

/// table: tsf modes by BOX off/on for the uncorrupted cells, then one line per
/// corrupted cell. csv re-emits the rows unchanged.
void render_report(std::ostream& os, std::span<const AblationRow> rows, ReportFormat format);

}  // namespace rvg
