#include "rvg/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rvg/ablation.hpp"
#include "rvg/cost_model.hpp"
#include "rvg/error.hpp"
#include "rvg/evaluation.hpp"
#include "rvg/filtration_head.hpp"
#include "rvg/mask.hpp"
#include "rvg/sample_io.hpp"
#include "rvg/synth.hpp"
#include "rvg/text.hpp"
#include "rvg/trajectory_io.hpp"
#include "rvg/tsf.hpp"

namespace rvg {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

// Writes to `path`, or to `fallback` when the path is empty.
void emit(const std::string& path, std::ostream& fallback, const std::function<void(std::ostream&)>& body) {
  if (path.empty()) {
    body(fallback);
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  body(os);
  if (!os) throw Error("write to '" + path + "' failed");
}

std::ifstream open_input(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open '" + path + "'");
  return is;
}

// --config support: keys of the JSON object become flags unless already given.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> kept;
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config requires a path");
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      kept.push_back(args[i]);
    }
  }
  if (config_path.empty()) return kept;

  std::set<std::string> given;
  for (const std::string& a : kept) {
    if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2));
  }
  std::ifstream is = open_input(config_path);
  ordered_json cfg;
  try {
    cfg = ordered_json::parse(is);
  } catch (const ordered_json::exception& e) {
    throw ParseError(0, "config '" + config_path + "': " + e.what());
  }
  if (!cfg.is_object()) throw ParseError(0, "config '" + config_path + "' must be a JSON object");

  auto scalar = [](const ordered_json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
  for (const auto& [key, value] : cfg.items()) {
    if (given.count(key)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) kept.push_back("--" + key);
    } else if (value.is_array()) {
      kept.push_back("--" + key);
      for (const auto& v : value) kept.push_back(scalar(v));
    } else if (!value.is_null()) {
      kept.push_back("--" + key);
      kept.push_back(scalar(value));
    }
  }
  return kept;
}

CorruptionSetting parse_corruption(const std::string& spec) {
  const auto colon = spec.find(':');
  CorruptionSetting c;
  c.kind = parse_corruption_kind(spec.substr(0, colon));
  if (colon != std::string::npos) {
    const auto level = text::parse_double(std::string_view(spec).substr(colon + 1));
    if (!level) throw InvalidArgument("corruption level in '" + spec + "' is not a number");
    c.level = *level;
  }
  if (c.kind == CorruptionKind::none) c.level = 0.0;
  return c;
}

bool parse_on_off(const std::string& s) {
  if (s == "on") return true;
  if (s == "off") return false;
  throw InvalidArgument("expected on/off, got '" + s + "'");
}

// Gathers trajectories in the order write_trajectories emits them.
std::vector<const Trajectory*> file_order(std::span<const Trajectory> trajs) {
  std::vector<const Trajectory*> order;
  for (const Trajectory& t : trajs) order.push_back(&t);
  std::stable_sort(order.begin(), order.end(), [](const Trajectory* a, const Trajectory* b) {
    return std::tie(a->video_id, a->target_id) < std::tie(b->video_id, b->target_id);
  });
  return order;
}

struct Commands {
  Commands(std::ostream& o, std::ostream& e) : out(o), err(e) {}

  std::ostream& out;
  std::ostream& err;
  std::uint64_t seed = 0;
  std::function<void()> run;

  // tsf select
  std::string trajectories, features, output, tokens_out;
  int clusters = kDefaultTsfClusters;
  double spatial_weight = kDefaultSpatialWeight;
  int restarts = 10;
  int proj_dim = 0;
  double proj_scale = 1.0;
  // tsf corrupt
  std::string kind = "jitter";
  double level = 0.0;
  // filter
  std::string samples, head, curve;
  int steps = 500, hidden = 16, top_m = kDefaultTopM;
  double lr = 0.05, tau = kDefaultTau;
  double lambda_cls = 1.0, lambda_box = 2.0, lambda_fuse = FilterLossConfig{}.lambda_fuse;
  bool no_refine = false;
  // eval
  std::vector<std::string> pred, gt;
  std::string proposals;
  std::size_t topk = 1;
  double iou_thresh = 0.5;
  // cost
  long long targets = 1, frames = 300;
  std::string flags;
  // synth / ablate
  SceneConfig scene;
  std::string out_dir;
  int train_scenes = 200, test_scenes = 50;
  std::vector<std::string> tsf_modes{"none", "train_only", "train_and_inference"};
  std::vector<std::string> box_modes{"off", "on"};
  std::vector<std::string> corruptions{"none"};
  // report
  std::string results, format = "table";

  void tsf_select();
  void tsf_corrupt();
  void filter_train();
  void filter_infer();
  void eval_jf();
  void eval_recall();
  void cost_estimate();
  void synth_gen();
  void ablate_run();
  void report_render();
};

void Commands::tsf_select() {
  std::ifstream ti = open_input(trajectories);
  const auto trajs = read_trajectories(ti);
  const auto crops = read_feature_matrix_file(features);
  std::size_t needed = 0;
  for (const Trajectory& t : trajs) needed += t.points.size();
  if (crops.size() != needed) {
    throw InvalidArgument("features: " + std::to_string(crops.size()) + " rows for " + std::to_string(needed) +
                          " trajectory points");
  }
  std::vector<FeatureVector> token_rows;
  int token_dim = 0;
  std::ostringstream lines;
  std::size_t offset = 0;
  for (const Trajectory& t : trajs) {
    const std::span<const FeatureVector> own(crops.data() + offset, t.points.size());
    offset += t.points.size();
    ordered_json j;
    j["video_id"] = t.video_id;
    j["target_id"] = t.target_id;
    j["indices"] = ordered_json::array();
    j["frames"] = ordered_json::array();
    if (!own.empty()) {
      const auto joint = build_joint_features(t, own, spatial_weight);
      const int k = std::min<int>(clusters, static_cast<int>(own.size()));
      const auto picks = select_representatives(joint, k, seed, restarts);
      std::vector<FeatureVector> chosen;
      for (std::size_t i : picks) {
        j["indices"].push_back(i);
        j["frames"].push_back(t.points[i].frame);
        chosen.push_back(own[i]);
      }
      const int dim = static_cast<int>(own.front().size());
      const ProjectionMap map = proj_dim > 0 ? ProjectionMap::random(dim, proj_dim, seed, proj_scale)
                                             : ProjectionMap::identity(dim).scaled(proj_scale);
      for (auto& tok : emit_tsf_tokens(chosen, map, picks).tokens) token_rows.push_back(std::move(tok));
      token_dim = map.dim_out();
    }
    lines << j.dump() << '\n';
  }
  emit(output, out, [&](std::ostream& os) { os << lines.str(); });
  if (!tokens_out.empty()) write_feature_matrix_file(tokens_out, token_rows, token_dim);
}

void Commands::tsf_corrupt() {
  std::ifstream ti = open_input(trajectories);
  const auto trajs = read_trajectories(ti);
  const auto corrupted = apply_corruption(trajs, parse_corruption_kind(kind), level, seed);
  emit(output, out, [&](std::ostream& os) { write_trajectories(os, corrupted); });
}

void Commands::filter_train() {
  const auto records = read_samples_file(samples);
  if (records.empty()) throw InvalidArgument("filter train: no samples in '" + samples + "'");
  std::vector<TrainingSample> batch;
  for (const SampleRecord& r : records) batch.push_back(r.sample);
  TrainConfig tc;
  tc.lr = lr;
  tc.steps = steps;
  tc.seed = seed;
  tc.top_m = top_m;
  tc.tau = tau;
  tc.dims = {static_cast<int>(batch.front().query.size()), hidden};
  tc.loss.lambda_cls = lambda_cls;
  tc.loss.lambda_box = lambda_box;
  tc.loss.lambda_fuse = lambda_fuse;
  tc.refine = !no_refine;
  const TrainResult r = train(batch, tc);
  write_checkpoint_file(head, r.params);
  if (!curve.empty()) {
    emit(curve, out, [&](std::ostream& os) {
      os << "step,loss\n";
      for (std::size_t i = 0; i < r.loss_curve.size(); ++i) os << i << ',' << text::format_double(r.loss_curve[i]) << '\n';
    });
  }
  ordered_json summary;
  summary["samples"] = batch.size();
  summary["steps"] = steps;
  summary["initial_loss"] = r.loss_curve.empty() ? 0.0 : r.loss_curve.front();
  summary["final_loss"] = batch_loss(r.params, batch, tc.loss, tc.top_m);
  emit(output, out, [&](std::ostream& os) { os << summary.dump(2) << '\n'; });
}

void Commands::filter_infer() {
  const HeadParams params = read_checkpoint_file(head);
  const auto records = read_samples_file(samples);
  emit(output, out, [&](std::ostream& os) {
    for (const SampleRecord& r : records) {
      write_decisions(os, r.id, run_head(r.sample.query, r.sample.proposals, params, top_m, tau));
    }
  });
}

void Commands::eval_jf() {
  if (pred.size() != gt.size()) throw CLI::ValidationError("--pred and --gt need the same number of files");
  std::vector<SequenceScore> scores;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const MaskVideo p = read_mask_file(pred[i]);
    MaskVideo g = read_mask_file(gt[i]);
    g.video_id = p.video_id;
    scores.push_back(sequence_eval(p, g));
  }
  const MetricReport report = aggregate(std::move(scores));
  emit(output, out, [&](std::ostream& os) { write_metric_csv(os, report); });
}

void Commands::eval_recall() {
  const auto records = read_proposals_file(proposals);
  std::ifstream ti = open_input(trajectories);
  const auto trajs = read_trajectories(ti);
  std::map<std::pair<std::string, int>, std::vector<Box>> gt_boxes;
  for (const Trajectory& t : trajs) {
    for (const TrajectoryPoint& p : t.points) gt_boxes[{t.video_id, p.frame}].push_back(p.box);
  }
  std::vector<FrameProposals> frames_used;
  std::vector<std::vector<Box>> gts;
  for (const ProposalRecord& r : records) {
    const auto it = gt_boxes.find({r.video_id, r.frame});
    if (it == gt_boxes.end()) continue;
    frames_used.push_back(r.proposals);
    gts.push_back(it->second);
  }
  ordered_json j;
  j["topk"] = topk;
  j["iou"] = iou_thresh;
  j["frames"] = frames_used.size();
  j["recall"] = oracle_recall(frames_used, gts, topk, iou_thresh);
  emit(output, out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

void Commands::cost_estimate() {
  Scenario s;
  s.targets = targets;
  s.frames = frames;
  s.flags = parse_flags(flags);
  ordered_json j;
  j["targets"] = targets;
  j["frames"] = frames;
  j["components"] = ordered_json::array();
  for (const ComponentCost& c : component_breakdown(s)) {
    ordered_json cj;
    cj["name"] = c.name;
    cj["seconds"] = c.seconds;
    j["components"].push_back(std::move(cj));
  }
  j["total"] = total_overhead(s);
  j["recommendation"] = std::string(to_string(recommend_tsf(s)));
  emit(output, out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

void Commands::synth_gen() {
  if (out_dir.empty()) throw CLI::ValidationError("--out-dir is required");
  SceneConfig c = scene;
  c.seed = seed;
  const auto scenes = gen_scenes(c);
  fs::create_directories(fs::path(out_dir) / "masks");

  std::vector<Trajectory> all, targets_only;
  std::vector<ProposalRecord> props;
  std::vector<SampleRecord> samples_out;
  ordered_json manifest;
  manifest["seed"] = seed;
  manifest["count"] = c.count;
  manifest["frames"] = c.frames;
  manifest["grid_size"] = c.grid_size;
  manifest["n_objects"] = c.n_objects;
  manifest["noise"] = c.noise;
  manifest["feature_dim"] = c.feature_dim;
  manifest["scenes"] = ordered_json::array();
  for (const SyntheticScene& s : scenes) {
    for (const SceneObject& o : s.objects) all.push_back(o.trajectory);
    targets_only.push_back(s.target_object().trajectory);
    ProposalRecord pr{s.video_id, 0, {}};
    for (const ScoredBox& b : s.proposals) {
      pr.proposals.boxes.push_back(b.box);
      pr.proposals.objectness.push_back(b.score);
    }
    props.push_back(std::move(pr));
    samples_out.push_back({s.video_id, {s.query, scene_candidates(s, c), {s.target_box()}}});
    write_mask_file((fs::path(out_dir) / "masks" / (s.video_id + ".mask")).string(), s.gt_masks);

    ordered_json sj;
    sj["video_id"] = s.video_id;
    sj["target_id"] = s.target_object().trajectory.target_id;
    sj["objects"] = s.objects.size();
    sj["distractors"] = s.distractors;
    sj["proposals"] = s.proposals.size();
    manifest["scenes"].push_back(std::move(sj));
  }
  manifest["trajectories"] = all.size();

  // Crop features per trajectory point, in trajectories.jsonl order.
  std::map<std::string, const SyntheticScene*> by_id;
  for (const SyntheticScene& s : scenes) by_id[s.video_id] = &s;
  std::vector<FeatureVector> crops;
  for (const Trajectory* t : file_order(all)) {
    const SyntheticScene& s = *by_id.at(t->video_id);
    for (const TrajectoryPoint& p : t->points) crops.push_back(crop_feature(s.pyramids[p.frame], p.box, c.roi_size));
  }

  const fs::path dir(out_dir);
  write_trajectories_file((dir / "trajectories.jsonl").string(), all);
  write_trajectories_file((dir / "targets.jsonl").string(), targets_only);
  emit((dir / "proposals.jsonl").string(), out, [&](std::ostream& os) { write_proposals(os, props); });
  write_samples_file((dir / "samples.jsonl").string(), samples_out);
  write_feature_matrix_file((dir / "crops.fmat").string(), crops, c.feature_dim);
  emit((dir / "manifest.json").string(), out, [&](std::ostream& os) { os << manifest.dump(2) << '\n'; });
  err << "wrote " << scenes.size() << " scenes, " << all.size() << " trajectories to " << out_dir << '\n';
}

void Commands::ablate_run() {
  if (out_dir.empty()) throw CLI::ValidationError("--out-dir is required");
  ExperimentGrid grid;
  grid.seed = seed;
  grid.train_scenes = train_scenes;
  grid.test_scenes = test_scenes;
  grid.scenes = scene;
  grid.tsf_modes.clear();
  for (const auto& m : tsf_modes) grid.tsf_modes.push_back(parse_tsf_mode(m));
  grid.box_prompt.clear();
  for (const auto& b : box_modes) grid.box_prompt.push_back(parse_on_off(b));
  grid.corruptions.clear();
  for (const auto& c : corruptions) grid.corruptions.push_back(parse_corruption(c));
  grid.train.steps = steps;
  grid.train.lr = lr;
  grid.train.top_m = top_m;
  grid.train.tau = tau;
  grid.train.loss.lambda_box = lambda_box;
  validate(grid);

  const AblationResult result = run_ablation(grid);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  emit((dir / "results.csv").string(), out, [&](std::ostream& os) { write_results_csv(os, result.rows); });
  ordered_json summary;
  summary["metric"] = "box-IoU selection accuracy";
  summary["seed"] = seed;
  summary["train_scenes"] = train_scenes;
  summary["test_scenes"] = test_scenes;
  summary["baseline_sel_acc"] = result.baseline_sel_acc;
  summary["baseline_recall"] = result.baseline_recall;
  summary["rows"] = result.rows.size();
  emit((dir / "summary.json").string(), out, [&](std::ostream& os) { os << summary.dump(2) << '\n'; });
  render_report(out, result.rows, ReportFormat::table);
  out << "objectness top-1 baseline: " << text::format_fixed(100.0 * result.baseline_sel_acc, 1) << "\n";
}

void Commands::report_render() {
  std::ifstream is = open_input(results);
  const auto rows = read_results_csv(is);
  const ReportFormat f = parse_report_format(format);
  emit(output, out, [&](std::ostream& os) { render_report(os, rows, f); });
}

void add_seed(CLI::App* app, Commands& c) { app->add_option("--seed", c.seed, "random seed")->capture_default_str(); }

void add_scene_options(CLI::App* app, Commands& c) {
  app->add_option("--frames", c.scene.frames, "frames per scene")->capture_default_str();
  app->add_option("--grid", c.scene.grid_size, "finest pyramid side")->capture_default_str();
  app->add_option("--objects", c.scene.n_objects, "objects per scene")->capture_default_str();
  app->add_option("--noise", c.scene.noise, "feature noise std")->capture_default_str();
  app->add_option("--language-noise", c.scene.language_noise, "query noise")->capture_default_str();
}

std::unique_ptr<CLI::App> build_app(Commands& c) {
  auto app = std::make_unique<CLI::App>("Tracked-feature selection, dual-prompt filtration and RVOS evaluation tools",
                                        "rvg");
  app->require_subcommand(1);
  app->set_help_all_flag("--help-all", "help for every subcommand");
  app->footer("Every subcommand accepts --config <file.json>; its keys mirror the flags and flags win.");

  auto leaf = [&](CLI::App* parent, const char* name, const char* desc, void (Commands::*fn)()) {
    CLI::App* sub = parent->add_subcommand(name, desc);
    add_seed(sub, c);
    sub->callback([&c, fn] { c.run = [&c, fn] { (c.*fn)(); }; });
    return sub;
  };

  CLI::App* tsf = app->add_subcommand("tsf", "tracked-feature selection and trajectory corruption");
  tsf->require_subcommand(1);
  CLI::App* sel = leaf(tsf, "select", "pick K representative frames per trajectory", &Commands::tsf_select);
  sel->add_option("--trajectories", c.trajectories, "trajectory JSONL")->required();
  sel->add_option("--features", c.features, "FMAT crop features, one row per trajectory point")->required();
  sel->add_option("--clusters", c.clusters, "K")->capture_default_str();
  sel->add_option("--spatial-weight", c.spatial_weight)->capture_default_str();
  sel->add_option("--restarts", c.restarts)->capture_default_str();
  sel->add_option("--tokens", c.tokens_out, "write emitted tokens as FMAT");
  sel->add_option("--proj-dim", c.proj_dim, "token width; 0 keeps the feature width")->capture_default_str();
  sel->add_option("--proj-scale", c.proj_scale)->capture_default_str();
  sel->add_option("--out", c.output, "selection JSONL (default stdout)");

  CLI::App* cor = leaf(tsf, "corrupt", "apply jitter, id_switch or dropout to trajectories", &Commands::tsf_corrupt);
  cor->add_option("--in", c.trajectories, "trajectory JSONL")->required();
  cor->add_option("--kind", c.kind)->check(CLI::IsMember({"none", "jitter", "id_switch", "dropout"}))->capture_default_str();
  cor->add_option("--level", c.level, "corruption level p in [0, 1]")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  cor->add_option("--out", c.output, "trajectory JSONL (default stdout)");

  CLI::App* filter = app->add_subcommand("filter", "train or run the filtration head");
  filter->require_subcommand(1);
  CLI::App* tr = leaf(filter, "train", "full-batch gradient descent on a samples bundle", &Commands::filter_train);
  tr->add_option("--samples", c.samples, "samples JSONL")->required();
  tr->add_option("--out", c.head, "checkpoint path")->required();
  tr->add_option("--steps", c.steps)->check(CLI::NonNegativeNumber)->capture_default_str();
  tr->add_option("--lr", c.lr)->capture_default_str();
  tr->add_option("--hidden", c.hidden)->check(CLI::PositiveNumber)->capture_default_str();
  tr->add_option("--top-m", c.top_m)->capture_default_str();
  tr->add_option("--tau", c.tau)->capture_default_str();
  tr->add_option("--lambda-cls", c.lambda_cls)->capture_default_str();
  tr->add_option("--lambda-box", c.lambda_box)->capture_default_str();
  tr->add_option("--lambda-fuse", c.lambda_fuse)->capture_default_str();
  tr->add_flag("--no-refine", c.no_refine, "score-only head");
  tr->add_option("--curve", c.curve, "write the loss curve as CSV");
  tr->add_option("--summary", c.output, "training summary JSON (default stdout)");

  CLI::App* inf = leaf(filter, "infer", "score, refine and select proposals", &Commands::filter_infer);
  inf->add_option("--head", c.head, "checkpoint path")->required();
  inf->add_option("--samples", c.samples, "samples JSONL")->required();
  inf->add_option("--top-m", c.top_m)->capture_default_str();
  inf->add_option("--tau", c.tau)->capture_default_str();
  inf->add_option("--out", c.output, "decisions JSONL (default stdout)");

  CLI::App* ev = app->add_subcommand("eval", "RVOS metrics");
  ev->require_subcommand(1);
  CLI::App* jf = leaf(ev, "jf", "J, F and J&F per sequence", &Commands::eval_jf);
  jf->add_option("--pred", c.pred, "predicted MASK files")->required();
  jf->add_option("--gt", c.gt, "ground-truth MASK files, paired with --pred")->required();
  jf->add_option("--out", c.output, "metric CSV (default stdout)");
  CLI::App* rec = leaf(ev, "recall", "oracle recall of proposals against trajectories", &Commands::eval_recall);
  rec->add_option("--proposals", c.proposals, "proposals JSONL")->required();
  rec->add_option("--gt", c.trajectories, "ground-truth trajectory JSONL")->required();
  rec->add_option("--topk", c.topk)->capture_default_str();
  rec->add_option("--iou", c.iou_thresh)->capture_default_str();
  rec->add_option("--out", c.output, "JSON (default stdout)");

  CLI::App* cost = app->add_subcommand("cost", "tracked-feature latency model");
  cost->require_subcommand(1);
  CLI::App* est = leaf(cost, "estimate", "overhead for n targets over T frames", &Commands::cost_estimate);
  est->add_option("--targets", c.targets)->check(CLI::NonNegativeNumber)->capture_default_str();
  est->add_option("--frames", c.frames)->check(CLI::NonNegativeNumber)->capture_default_str();
  est->add_option("--flags", c.flags, "fast_motion,occlusion,small_target,crowded,short_simple");
  est->add_option("--out", c.output, "JSON (default stdout)");

  CLI::App* synth = app->add_subcommand("synth", "synthetic scenes");
  synth->require_subcommand(1);
  CLI::App* gen = leaf(synth, "gen", "write scenes, trajectories, proposals, samples and masks", &Commands::synth_gen);
  gen->add_option("--count", c.scene.count)->check(CLI::PositiveNumber)->capture_default_str();
  add_scene_options(gen, c);
  gen->add_option("--out-dir", c.out_dir)->required();

  CLI::App* abl = app->add_subcommand("ablate", "TSF x BOX ablation on synthetic scenes");
  abl->require_subcommand(1);
  CLI::App* run = leaf(abl, "run", "train and evaluate every grid cell", &Commands::ablate_run);
  run->add_option("--train-scenes", c.train_scenes)->check(CLI::PositiveNumber)->capture_default_str();
  run->add_option("--test-scenes", c.test_scenes)->check(CLI::PositiveNumber)->capture_default_str();
  run->add_option("--tsf-modes", c.tsf_modes)->check(CLI::IsMember({"none", "train_only", "train_and_inference"}))->capture_default_str();
  run->add_option("--box", c.box_modes)->check(CLI::IsMember({"off", "on"}))->capture_default_str();
  run->add_option("--corruption", c.corruptions, "kind:level, e.g. jitter:0.1")->capture_default_str();
  run->add_option("--steps", c.steps)->check(CLI::NonNegativeNumber)->capture_default_str();
  run->add_option("--lr", c.lr)->capture_default_str();
  run->add_option("--lambda-box", c.lambda_box)->capture_default_str();
  run->add_option("--top-m", c.top_m)->capture_default_str();
  run->add_option("--tau", c.tau)->capture_default_str();
  add_scene_options(run, c);
  run->add_option("--out-dir", c.out_dir)->required();

  CLI::App* report = app->add_subcommand("report", "render ablation results");
  report->require_subcommand(1);
  CLI::App* ren = leaf(report, "render", "table, markdown or csv", &Commands::report_render);
  ren->add_option("--results", c.results, "results.csv")->required();
  ren->add_option("--format", c.format)->check(CLI::IsMember({"table", "markdown", "csv"}))->capture_default_str();
  ren->add_option("--out", c.output, "default stdout");
  return app;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Commands c(out, err);
  const TrainConfig ablation = default_ablation_training();
  // ablate run starts from the ablation defaults; filter train keeps the library defaults.
  if (!args.empty() && (args[0] == "ablate" || args[0] == "synth")) c.seed = SceneConfig{}.seed;
  if (!args.empty() && args[0] == "ablate") {
    c.steps = ablation.steps;
    c.lr = ablation.lr;
    c.lambda_box = ablation.loss.lambda_box;
  }
  auto app = build_app(c);
  try {
    std::vector<std::string> expanded = expand_config(args);
    std::reverse(expanded.begin(), expanded.end());  // CLI11 consumes from the back
    app->parse(expanded);
  } catch (const CLI::CallForHelp&) {
    out << app->help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app->help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "rvg: " << e.what() << "\n\n" << app->help();
    return kExitUsage;
  } catch (const Error& e) {
    err << "rvg: error: " << e.what() << '\n';
    return kExitData;
  }
  try {
    c.run();
  } catch (const CLI::ParseError& e) {
    err << "rvg: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "rvg: error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace rvg
