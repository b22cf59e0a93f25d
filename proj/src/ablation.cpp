#include "rvg/ablation.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>

#include "rvg/error.hpp"
#include "rvg/evaluation.hpp"
#include "rvg/random.hpp"
#include "rvg/text.hpp"

namespace rvg {

namespace {

constexpr double kHitIou = 0.5;

std::string_view on_off(bool v) { return v ? "on" : "off"; }

bool uncorrupted(const AblationRow& r) { return r.corruption == CorruptionKind::none || r.level == 0.0; }

}  // namespace

TsfMode parse_tsf_mode(std::string_view name) {
  if (name == "none") return TsfMode::none;
  if (name == "train_only") return TsfMode::train_only;
  if (name == "train_and_inference") return TsfMode::train_and_inference;
  throw InvalidArgument("unknown tsf mode '" + std::string(name) + "'");
}

std::string_view to_string(TsfMode mode) {
  switch (mode) {
    case TsfMode::none: return "none";
    case TsfMode::train_only: return "train_only";
    case TsfMode::train_and_inference: return "train_and_inference";
  }
  return "none";
}

TrainConfig default_ablation_training() {
  TrainConfig tc;
  tc.lr = 1.0;
  tc.steps = 500;
  tc.loss.lambda_box = 0.01;
  return tc;
}

void validate(const ExperimentGrid& grid) {
  if (grid.tsf_modes.empty() || grid.box_prompt.empty() || grid.corruptions.empty()) {
    throw InvalidArgument("ablation grid: every axis needs at least one value");
  }
  if (grid.train_scenes < 1 || grid.test_scenes < 1) {
    throw InvalidArgument("ablation grid: scene counts must be >= 1");
  }
  for (const CorruptionSetting& c : grid.corruptions) {
    if (!(c.level >= 0.0 && c.level <= 1.0)) throw InvalidArgument("ablation grid: corruption level outside [0, 1]");
  }
}

std::vector<PreparedScene> prepare_scenes(const SceneConfig& config, int first, int count) {
  std::vector<PreparedScene> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    PreparedScene p{gen_scene(config, static_cast<std::size_t>(first + i)), {}};
    p.candidates = scene_candidates(p.scene, config);
    out.push_back(std::move(p));
  }
  return out;
}

QueryEmbedding cell_query(const PreparedScene& prepared, const SceneConfig& config, bool use_tsf,
                          const CorruptionSetting& corruption, std::uint64_t seed) {
  const SyntheticScene& s = prepared.scene;
  if (!use_tsf) return s.query;
  std::vector<Trajectory> trajs;
  for (const SceneObject& o : s.objects) trajs.push_back(o.trajectory);
  const auto corrupted = apply_corruption(trajs, corruption.kind, corruption.level, seed);
  return tsf_query(s.query, corrupted[s.target], s, query_map(config), config, kDefaultTsfClusters,
                   Rng::mix(seed, 1));
}

bool top_selection_hit(std::span<const FilterDecision> decisions, const Box& target) {
  return !decisions.empty() && decisions.front().selected && iou(decisions.front().refined_box, target) > kHitIou;
}

AblationResult run_ablation(const ExperimentGrid& grid) {
  validate(grid);
  SceneConfig sc = grid.scenes;
  sc.seed = grid.seed;
  sc.count = grid.train_scenes + grid.test_scenes;
  validate(sc);
  const auto train_set = prepare_scenes(sc, 0, grid.train_scenes);
  const auto test_set = prepare_scenes(sc, grid.train_scenes, grid.test_scenes);
  const double n_test = static_cast<double>(test_set.size());

  AblationResult result;
  {
    std::vector<FrameProposals> frames;
    std::vector<std::vector<Box>> gts;
    for (const PreparedScene& p : test_set) {
      FrameProposals f;
      for (const ScoredBox& b : p.scene.proposals) {
        f.boxes.push_back(b.box);
        f.objectness.push_back(b.score);
      }
      frames.push_back(std::move(f));
      gts.push_back({p.scene.target_box()});
    }
    result.baseline_sel_acc = oracle_recall(frames, gts, 1, kHitIou);
    result.baseline_recall = oracle_recall(frames, gts, static_cast<std::size_t>(std::max(grid.train.top_m, 0)), kHitIou);
  }

  const int d = head_width(sc);
  for (TsfMode mode : grid.tsf_modes) {
    for (bool box : grid.box_prompt) {
      for (const CorruptionSetting& corruption : grid.corruptions) {
        std::vector<TrainingSample> samples;
        samples.reserve(2 * train_set.size());
        for (std::size_t i = 0; i < train_set.size(); ++i) {
          const PreparedScene& p = train_set[i];
          samples.push_back({p.scene.query, p.candidates, {p.scene.target_box()}});
        }
        if (mode != TsfMode::none) {
          // Tracked-feature queries are added next to, not instead of, the plain ones.
          for (std::size_t i = 0; i < train_set.size(); ++i) {
            const PreparedScene& p = train_set[i];
            samples.push_back({cell_query(p, sc, true, corruption, Rng::mix(grid.seed, i)), p.candidates,
                               {p.scene.target_box()}});
          }
        }
        TrainConfig tc = grid.train;
        tc.dims = {d, d};
        tc.seed = grid.seed;
        tc.refine = box;
        const TrainResult trained = train(samples, tc);

        std::size_t hits = 0, any = 0;
        for (std::size_t j = 0; j < test_set.size(); ++j) {
          const PreparedScene& p = test_set[j];
          const QueryEmbedding q =
              mode == TsfMode::train_and_inference
                  ? cell_query(p, sc, true, {}, Rng::mix(grid.seed, train_set.size() + j))
                  : p.scene.query;
          const auto decisions = run_head(q, p.candidates, trained.params, tc.top_m, tc.tau);
          if (top_selection_hit(decisions, p.scene.target_box())) ++hits;
          for (const FilterDecision& dec : decisions) {
            if (dec.selected && iou(dec.refined_box, p.scene.target_box()) > kHitIou) {
              ++any;
              break;
            }
          }
        }
        result.rows.push_back({mode, box, corruption.kind, corruption.level, static_cast<double>(hits) / n_test,
                               static_cast<double>(any) / n_test, grid.seed});
      }
    }
  }
  return result;
}

void write_results_csv(std::ostream& os, std::span<const AblationRow> rows) {
  os << kResultsHeader << '\n';
  for (const AblationRow& r : rows) {
    os << to_string(r.tsf_mode) << ',' << on_off(r.box_prompt) << ',' << to_string(r.corruption) << ','
       << text::format_double(r.level) << ',' << text::format_double(r.sel_acc) << ','
       << text::format_double(r.recall) << ',' << r.seed << '\n';
  }
}

std::vector<AblationRow> read_results_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kResultsHeader) {
    throw ParseError(1, "results: expected header '" + std::string(kResultsHeader) + "'");
  }
  std::vector<AblationRow> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = text::split(line, ',');
    if (f.size() != 7) throw ParseError(line_no, "results: expected 7 fields, found " + std::to_string(f.size()));
    AblationRow r;
    try {
      r.tsf_mode = parse_tsf_mode(f[0]);
      r.corruption = parse_corruption_kind(f[2]);
    } catch (const InvalidArgument& e) {
      throw ParseError(line_no, e.what());
    }
    if (f[1] != "on" && f[1] != "off") throw ParseError(line_no, "results: box_prompt must be on or off");
    r.box_prompt = f[1] == "on";
    const auto level = text::parse_double(f[3]);
    const auto acc = text::parse_double(f[4]);
    const auto rec = text::parse_double(f[5]);
    const auto seed = text::parse_int(f[6]);
    if (!level || !acc || !rec || !seed || *seed < 0) throw ParseError(line_no, "results: bad numeric field");
    r.level = *level;
    r.sel_acc = *acc;
    r.recall = *rec;
    r.seed = static_cast<std::uint64_t>(*seed);
    rows.push_back(r);
  }
  return rows;
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "table") return ReportFormat::table;
  if (name == "markdown") return ReportFormat::markdown;
  if (name == "csv") return ReportFormat::csv;
  throw InvalidArgument("unknown report format '" + std::string(name) + "'");
}

void render_report(std::ostream& os, std::span<const AblationRow> rows, ReportFormat format) {
  if (format == ReportFormat::csv) {
    write_results_csv(os, rows);
    return;
  }
  // First uncorrupted cell per (mode, box) wins the pivot.
  std::map<std::pair<int, bool>, const AblationRow*> pivot;
  std::vector<TsfMode> modes;
  std::vector<const AblationRow*> sweeps;
  for (const AblationRow& r : rows) {
    if (std::find(modes.begin(), modes.end(), r.tsf_mode) == modes.end()) modes.push_back(r.tsf_mode);
    if (uncorrupted(r)) pivot.emplace(std::make_pair(static_cast<int>(r.tsf_mode), r.box_prompt), &r);
    if (r.corruption != CorruptionKind::none) sweeps.push_back(&r);
  }
  auto cell = [&](TsfMode m, bool box) -> std::string {
    const auto it = pivot.find({static_cast<int>(m), box});
    return it == pivot.end() ? "-" : text::format_fixed(100.0 * it->second->sel_acc, 1);
  };
  const bool md = format == ReportFormat::markdown;

  os << (md ? "Box-IoU selection accuracy (%) on held-out synthetic scenes.\n\n"
            : "box-IoU selection accuracy (%), held-out synthetic scenes\n");
  if (md) {
    os << "| tsf_mode | BOX off | BOX on |\n|---|---|---|\n";
    for (TsfMode m : modes) os << "| " << to_string(m) << " | " << cell(m, false) << " | " << cell(m, true) << " |\n";
  } else {
    os << "tsf_mode              BOX off  BOX on\n";
    for (TsfMode m : modes) {
      std::string name(to_string(m));
      name.resize(20, ' ');
      std::string off = cell(m, false), on = cell(m, true);
      off.insert(0, off.size() < 7 ? 7 - off.size() : 0, ' ');
      on.insert(0, on.size() < 7 ? 7 - on.size() : 0, ' ');
      os << name << "  " << off << "  " << on << '\n';
    }
  }
  if (!sweeps.empty()) {
    os << (md ? "\n| tsf_mode | BOX | corruption | level | sel_acc (%) | recall@0.5 (%) |\n|---|---|---|---|---|---|\n"
              : "\ncorruption sweep (training trajectories only)\n");
    for (const AblationRow* r : sweeps) {
      const std::string acc = text::format_fixed(100.0 * r->sel_acc, 1);
      const std::string rec = text::format_fixed(100.0 * r->recall, 1);
      if (md) {
        os << "| " << to_string(r->tsf_mode) << " | " << on_off(r->box_prompt) << " | " << to_string(r->corruption)
           << " | " << text::format_double(r->level) << " | " << acc << " | " << rec << " |\n";
      } else {
        os << to_string(r->tsf_mode) << " BOX " << on_off(r->box_prompt) << ' ' << to_string(r->corruption) << ' '
           << text::format_double(r->level) << ": sel_acc " << acc << " recall@0.5 " << rec << '\n';
      }
    }
  }
  os << (md ? "\n" : "") << "TSF modes average representative tracked-crop tokens into the query; "
     << "this stands in for extra language-model tokens.\n";
}

}  // namespace rvg
