// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "head_fixtures.hpp"
#include "oracles.hpp"
#include "rvg/ablation.hpp"
#include "rvg/cli.hpp"
#include "rvg/cost_model.hpp"
#include "rvg/evaluation.hpp"
#include "rvg/feature_grid.hpp"
#include "rvg/objectives.hpp"
#include "rvg/text.hpp"
#include "rvg/trajectory_io.hpp"
#include "rvg/tsf.hpp"

namespace fs = std::filesystem;
using namespace rvg;
using namespace rvg::testing;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (ok) return;
    if (pass) detail = what;
    pass = false;
  }
};

std::string f4(double v) { return text::format_fixed(v, 4); }

Box random_box(Rng& rng) {
  const double x1 = rng.uniform(0.0, 0.9), y1 = rng.uniform(0.0, 0.9);
  return {x1, y1, x1 + rng.uniform(0.01, 1.0 - x1), y1 + rng.uniform(0.01, 1.0 - y1)};
}

Outcome cost_model() {
  Outcome o;
  o.require(total_overhead({3, 300, {}}) == 18.093, "total(3,300) != 18.093");
  o.require(total_overhead({1, 300, {}}) == 6.093, "total(1,300) != 6.093");
  const auto unit = component_breakdown({1, 1, {}});
  const std::vector<std::pair<std::string, double>> expect{{"first_frame_detection", 0.090}, {"tracking", 0.018},
                                                           {"crop_features", 0.002},         {"clustering", 0.0},
                                                           {"projection", 0.0004},           {"llm_extra_tokens", 0.003}};
  o.require(unit.size() == expect.size(), "component count");
  for (std::size_t i = 0; i < std::min(unit.size(), expect.size()); ++i) {
    o.require(unit[i].name == expect[i].first && std::abs(unit[i].seconds - expect[i].second) < 1e-12,
              "component " + unit[i].name + " = " + std::to_string(unit[i].seconds));
  }
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Scenario s{static_cast<long long>(rng.index(64)), static_cast<long long>(rng.index(4000)), {}};
    o.require(std::abs(total_overhead(s) - (0.093 + 0.020 * double(s.targets * s.frames))) < 1e-9, "affinity");
  }
  o.detail = o.pass ? "18.093 / 6.093 exact, breakdown constants, 1000 affine checks" : o.detail;
  return o;
}

Outcome gradient_fidelity() {
  Outcome o;
  double worst = 0.0;
  std::string group;
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    Rng rng(Rng::mix(1234, seed));
    std::vector<TrainingSample> batch;
    for (int b = 0; b < 2; ++b) batch.push_back(random_sample(rng, 4, 6, 3));
    const auto chk = check_gradient(small_head({4, 5}, seed), batch, {}, 4);
    if (chk.worst_group_error > worst) {
      worst = chk.worst_group_error;
      group = chk.worst_group;
    }
  }
  o.require(worst < 1e-4, "relative error " + std::to_string(worst) + " in " + group);
  o.detail = o.pass ? "25 seeds, 13 groups, worst relative error " + std::to_string(worst) + " (" + group + ")" : o.detail;
  return o;
}

Outcome kmeans_oracle() {
  Outcome o;
  Rng rng(3);
  double worst = 0.0;
  for (int inst = 0; inst < 200; ++inst) {
    const int n = 1 + static_cast<int>(rng.index(8));
    const int k = 1 + static_cast<int>(rng.index(std::min(3, n)));
    const int d = 1 + static_cast<int>(rng.index(3));
    std::vector<std::vector<double>> pts(n, std::vector<double>(d));
    for (auto& p : pts)
      for (double& x : p) x = rng.uniform(-1.0, 1.0);
    const double got = kmeans(pts, {k, static_cast<std::uint64_t>(inst), 50, 100, 1e-10}).inertia;
    const double gap = std::abs(got - best_partition(pts, k).inertia);
    worst = std::max(worst, gap);
    o.require(gap <= 1e-9, "instance " + std::to_string(inst) + " gap " + std::to_string(gap));
  }
  if (o.pass) o.detail = "200 instances, worst gap " + std::to_string(worst);
  return o;
}

Outcome nms_oracle() {
  Outcome o;
  Rng rng(4);
  for (int inst = 0; inst < 1000; ++inst) {
    const int n = static_cast<int>(rng.index(51));
    std::vector<ScoredBox> c;
    for (int i = 0; i < n; ++i) c.push_back({random_box(rng), std::floor(rng.uniform() * 10) / 10});
    const double thr = rng.uniform();
    o.require(nms_indices(c, thr) == brute_force_nms(c, thr), "instance " + std::to_string(inst));
  }
  if (o.pass) o.detail = "1000 instances, exact equality";
  return o;
}

Outcome geometry_bounds() {
  Outcome o;
  Rng rng(5);
  for (int i = 0; i < 100000 && o.pass; ++i) {
    const Box a = random_box(rng), b = random_box(rng);
    const double g = giou(a, b);
    o.require(g > -1.0 && g <= 1.0, "giou out of range");
    o.require(g <= iou(a, b) + 1e-15, "giou > iou");
    o.require(std::abs(g - giou(b, a)) <= 1e-12, "asymmetric giou");
  }
  o.require(giou({0, 0, 1, 1}, {1, 1, 2, 2}) == -0.5, "giou of corner-touching squares");
  if (o.pass) o.detail = "1e5 pairs; giou([0,0,1,1],[1,1,2,2]) = -0.5";
  return o;
}

MaskFrame square(int w, int h, int x0, int y0, int side) {
  MaskFrame m(w, h);
  for (int y = y0; y < y0 + side; ++y)
    for (int x = x0; x < x0 + side; ++x) m.at(y, x) = 1.0;
  return m;
}

Outcome metric_suite() {
  Outcome o;
  MaskFrame p(2, 2), g(2, 2);
  p.at(0, 0) = p.at(0, 1) = 1.0;
  g.at(0, 1) = g.at(1, 1) = 1.0;
  o.require(std::abs(j_measure(p, g) - 1.0 / 3.0) < 1e-15, "J of the 2x2 case");
  const MaskFrame a = square(40, 40, 5, 5, 20);
  o.require(j_measure(a, a) == 1.0 && f_measure(a, a) == 1.0, "identical masks");
  o.require(j_measure(a, square(40, 40, 30, 30, 5)) == 0.0, "disjoint J");
  o.require(f_measure(MaskFrame(40, 40), a) == 0.0, "empty prediction F");
  o.require(f_measure(square(40, 40, 6, 5, 20), a) == 1.0, "one-pixel shift F");
  const SequenceScore half = sequence_eval(MaskVideo{"v", {a, MaskFrame(40, 40)}}, MaskVideo{"v", {a, a}});
  o.require(half.j == 0.5, "per-frame {1,0} mean");
  o.require(half.jf == (half.j + half.f) / 2.0, "J&F != (J+F)/2");

  Rng rng(6);
  for (int inst = 0; inst < 100; ++inst) {
    std::vector<FrameProposals> frames(3);
    std::vector<std::vector<Box>> gt(3);
    for (int f = 0; f < 3; ++f) {
      for (int i = 0; i < 3; ++i) gt[f].push_back(random_box(rng));
      for (int i = 0; i < 60; ++i) {
        frames[f].boxes.push_back(random_box(rng));
        frames[f].objectness.push_back(rng.uniform());
      }
    }
    double prev = -1.0;
    for (std::size_t k = 0; k <= 60; k += 5) {
      const double r = oracle_recall(frames, gt, k, 0.5);
      o.require(r >= prev, "recall not monotone in top-k, instance " + std::to_string(inst));
      prev = r;
    }
    MaskVideo pv{"v", {}}, gv{"v", {}};
    for (int f = 0; f < 2; ++f) {
      pv.frames.push_back(square(24, 24, static_cast<int>(rng.index(8)), static_cast<int>(rng.index(8)), 8));
      gv.frames.push_back(square(24, 24, static_cast<int>(rng.index(8)), static_cast<int>(rng.index(8)), 8));
    }
    const SequenceScore s = sequence_eval(pv, gv);
    o.require(s.jf == (s.j + s.f) / 2.0, "J&F identity");
  }
  if (o.pass) o.detail = "hand values, 100 monotone recall instances, J&F identity";
  return o;
}

Outcome loss_identities() {
  Outcome o;
  const std::vector<double> half(6, 0.5), t{1, 0, 0, 1, 1, 0};
  o.require(std::abs(bce(half, t) - std::log(2.0)) < 1e-15, "bce at 0.5 != ln 2");
  o.require(bce(t, t) < 2e-7, "bce optimum");
  const std::vector<double> pr{1.0, 0.0, 0.0}, tg{1.0, 1.0, 0.0};
  o.require(std::abs(dice(pr, tg, 0.0) - 1.0 / 3.0) < 1e-15, "dice half-target case");
  std::vector<double> big(10000, 1.0);
  o.require(dice(big, big) < 1e-3, "dice optimum");

  // Dyadic widths make the band edges exact: IoUs 0.96, 0.5 (not > 0.5), 0.2 (not < 0.2), 0.
  const std::vector<Box> gt{{0.0, 0.0, 0.625, 1.0}};
  auto out = [](Box box, double s, Box refined, double sf) {
    ProposalOutput p;
    p.box = box;
    p.s_lang = s;
    p.refined_box = refined;
    p.s_final = sf;
    p.refined = true;
    return p;
  };
  const std::vector<ProposalOutput> outs{out({0.0, 0.0, 0.6, 1.0}, 0.8, {0.02, 0.0, 0.62, 0.98}, 0.7),
                                         out({0.0, 0.0, 0.3125, 1.0}, 0.6, {0.0, 0.0, 0.3125, 1.0}, 0.5),
                                         out({0.0, 0.0, 0.125, 1.0}, 0.4, {0.0, 0.0, 0.125, 1.0}, 0.5),
                                         out({0.7, 0.0, 0.9, 0.5}, 0.3, {0.7, 0.0, 0.9, 0.5}, 0.2)};
  const FilterLoss l = filter_loss(outs, gt);
  o.require(l.positives == 1 && l.negatives == 1 && l.ignored == 2, "matching bands");
  const double cls = -(std::log(0.8) + std::log(0.7)) / 2.0;
  const double fuse = -(std::log(0.7) + std::log(0.8)) / 2.0;
  const Box& r = outs[0].refined_box;
  const double l1 = (std::abs(r.x1) + std::abs(r.y1) + std::abs(r.x2 - 0.625) + std::abs(r.y2 - 1.0)) / 4.0;
  const double gl = 1.0 - giou(r, gt[0]);
  o.require(std::abs(l.total - (1.0 * cls + 2.0 * (l1 + gl) + 0.1 * fuse)) < 1e-12, "L_filter assembly");
  if (o.pass) o.detail = "ln 2, optima, dice 1/3, L_filter = " + f4(l.total) + " term by term";
  return o;
}

Outcome ablation_shape() {
  Outcome o;
  ExperimentGrid grid;
  grid.seed = 7;
  grid.train_scenes = 200;
  grid.test_scenes = 50;
  const AblationResult main = run_ablation(grid);
  auto cell = [](const AblationResult& r, TsfMode m, bool box) {
    for (const auto& row : r.rows)
      if (row.tsf_mode == m && row.box_prompt == box && row.corruption == CorruptionKind::none) return row.sel_acc;
    return -1.0;
  };
  const double base = main.baseline_sel_acc;
  const double none_on = cell(main, TsfMode::none, true), tsf_on = cell(main, TsfMode::train_only, true);

  ExperimentGrid sweep = grid;
  sweep.tsf_modes = {TsfMode::train_only};
  sweep.box_prompt = {true};
  sweep.corruptions = {{CorruptionKind::jitter, 0.05}, {CorruptionKind::jitter, 0.10}, {CorruptionKind::jitter, 0.20}};
  const AblationResult jit = run_ablation(sweep);
  std::vector<double> curve{tsf_on};
  for (const auto& row : jit.rows) curve.push_back(row.sel_acc);

  o.require(none_on >= base + 0.10, "BOX on " + f4(none_on) + " vs baseline " + f4(base));
  o.require(tsf_on >= none_on, "train_only " + f4(tsf_on) + " < none " + f4(none_on));
  bool shape = true;
  for (std::size_t i = 1; i < curve.size(); ++i) shape = shape && curve[i] <= curve[i - 1] + 0.01;
  std::string sweep_text;
  for (double v : curve) sweep_text += (sweep_text.empty() ? "" : "/") + f4(v);
  o.require(shape, "jitter 0/5/10/20% = " + sweep_text + " is not nonincreasing within 1 point");
  const std::string summary = "baseline " + f4(base) + ", none+BOX " + f4(none_on) + ", train_only+BOX " + f4(tsf_on) +
                              ", jitter " + sweep_text;
  o.detail = o.pass ? summary : o.detail + " (" + summary + ")";
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  return cli_main(args, out, err);
}

Outcome determinism(const fs::path& work) {
  Outcome o;
  auto twice = [&](const std::string& label, const std::function<std::vector<std::string>(const std::string&)>& args,
                   const std::vector<std::string>& outputs) {
    for (const char* run : {"a", "b"}) {
      const std::string base = (work / run).string();
      fs::create_directories(base);
      o.require(cli(args(base)) == 0, label + " failed");
    }
    for (const auto& name : outputs) {
      const fs::path pa = work / "a" / name, pb = work / "b" / name;
      o.require(fs::exists(pa) && slurp(pa) == slurp(pb), label + ": " + name + " differs");
    }
  };
  const std::string corpus = (work / "corpus").string();
  o.require(cli({"synth", "gen", "--count", "4", "--frames", "5", "--out-dir", corpus}) == 0, "corpus");

  twice("synth gen", [](const std::string& b) { return std::vector<std::string>{"synth", "gen", "--count", "4", "--frames", "5", "--out-dir", b + "/synth"}; },
        {"synth/manifest.json", "synth/trajectories.jsonl", "synth/targets.jsonl", "synth/proposals.jsonl",
         "synth/samples.jsonl", "synth/crops.fmat"});
  twice("tsf select", [&](const std::string& b) { return std::vector<std::string>{"tsf", "select", "--trajectories", corpus + "/trajectories.jsonl", "--features", corpus + "/crops.fmat", "--tokens", b + "/tokens.fmat", "--proj-dim", "6", "--out", b + "/select.jsonl"}; },
        {"select.jsonl", "tokens.fmat"});
  twice("tsf corrupt", [&](const std::string& b) { return std::vector<std::string>{"tsf", "corrupt", "--in", corpus + "/trajectories.jsonl", "--kind", "id_switch", "--level", "0.4", "--out", b + "/corrupt.jsonl"}; },
        {"corrupt.jsonl"});
  twice("filter train", [&](const std::string& b) { return std::vector<std::string>{"filter", "train", "--samples", corpus + "/samples.jsonl", "--steps", "20", "--out", b + "/head.json", "--curve", b + "/curve.csv", "--summary", b + "/train.json"}; },
        {"head.json", "curve.csv", "train.json"});
  twice("filter infer", [&](const std::string& b) { return std::vector<std::string>{"filter", "infer", "--head", b + "/head.json", "--samples", corpus + "/samples.jsonl", "--out", b + "/decisions.jsonl"}; },
        {"decisions.jsonl"});
  std::vector<std::string> masks;
  for (const auto& e : fs::directory_iterator(work / "corpus" / "masks")) masks.push_back(e.path().string());
  std::sort(masks.begin(), masks.end());
  twice("eval jf", [&](const std::string& b) {
    std::vector<std::string> a{"eval", "jf", "--pred"};
    a.insert(a.end(), masks.begin(), masks.end());
    a.push_back("--gt");
    a.insert(a.end(), masks.rbegin(), masks.rend());
    a.insert(a.end(), {"--out", b + "/jf.csv"});
    return a;
  }, {"jf.csv"});
  twice("eval recall", [&](const std::string& b) { return std::vector<std::string>{"eval", "recall", "--proposals", corpus + "/proposals.jsonl", "--gt", corpus + "/trajectories.jsonl", "--out", b + "/recall.json"}; },
        {"recall.json"});
  twice("cost estimate", [](const std::string& b) { return std::vector<std::string>{"cost", "estimate", "--targets", "3", "--frames", "300", "--flags", "crowded", "--out", b + "/cost.json"}; },
        {"cost.json"});
  twice("ablate run", [](const std::string& b) { return std::vector<std::string>{"ablate", "run", "--train-scenes", "12", "--test-scenes", "6", "--steps", "15", "--corruption", "none:0", "jitter:0.1", "--out-dir", b + "/abl"}; },
        {"abl/results.csv", "abl/summary.json"});
  twice("report render", [](const std::string& b) { return std::vector<std::string>{"report", "render", "--results", b + "/abl/results.csv", "--format", "markdown", "--out", b + "/report.md"}; },
        {"report.md"});

  const std::vector<Trajectory> ts = read_trajectories_file(corpus + "/trajectories.jsonl");
  for (auto kind : {CorruptionKind::none, CorruptionKind::jitter, CorruptionKind::id_switch, CorruptionKind::dropout}) {
    o.require(apply_corruption(ts, kind, 0.0, 9) == ts, std::string(to_string(kind)) + " at p=0 is not the identity");
  }
  if (o.pass) o.detail = "10 CLI commands byte-identical on rerun; 4 corruption kinds identity at p=0";
  return o;
}

template <class Write, class Read>
bool stable(const Write& write, const Read& read) {
  std::ostringstream first;
  write(first, read(nullptr));
  std::istringstream in(first.str());
  std::ostringstream second;
  write(second, read(&in));
  return first.str() == second.str();
}

Outcome round_trips(const fs::path& work) {
  Outcome o;
  const std::string corpus = (work / "corpus").string();
  Rng rng(10);

  std::ifstream fm(corpus + "/crops.fmat");
  const auto rows = read_feature_matrix(fm);
  const int dim = rows.empty() ? 0 : static_cast<int>(rows[0].size());
  o.require(stable([&](std::ostream& os, const std::vector<FeatureVector>& r) { write_feature_matrix(os, r, dim); },
                   [&](std::istream* is) { return is ? read_feature_matrix(*is) : rows; }),
            "FMAT");

  MaskVideo mask;
  for (const auto& e : fs::directory_iterator(work / "corpus" / "masks")) {
    mask = read_mask_file(e.path().string());
    break;
  }
  o.require(stable([](std::ostream& os, const MaskVideo& v) { write_mask_video(os, v); },
                   [&](std::istream* is) { return is ? read_mask_video(*is, mask.video_id) : mask; }),
            "MASK");

  const auto ts = read_trajectories_file(corpus + "/trajectories.jsonl");
  o.require(stable([](std::ostream& os, const std::vector<Trajectory>& t) { write_trajectories(os, t); },
                   [&](std::istream* is) { return is ? read_trajectories(*is) : ts; }),
            "trajectory JSONL");

  const HeadParams head = small_head({7, 5}, 3);
  o.require(stable([](std::ostream& os, const HeadParams& p) { write_checkpoint(os, p); },
                   [&](std::istream* is) { return is ? read_checkpoint(*is) : head; }),
            "HEAD checkpoint");
  if (o.pass) o.detail = "FMAT, MASK, trajectory JSONL, HEAD stable after write-read-write";
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;  // 0 means no stated limit
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / "rvg_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  const std::vector<Criterion> criteria{
      {1, "cost model", 1.0, cost_model},
      {2, "gradient fidelity", 30.0, gradient_fidelity},
      {3, "k-means oracle", 20.0, kmeans_oracle},
      {4, "NMS oracle", 5.0, nms_oracle},
      {5, "geometry bounds", 0.0, geometry_bounds},
      {6, "metric suite", 0.0, metric_suite},
      {7, "loss identities", 0.0, loss_identities},
      {8, "synthetic ablation shape", 120.0, ablation_shape},
      {9, "determinism", 0.0, [&] { return determinism(work); }},
      {10, "format round-trips", 0.0, [&] { return round_trips(work); }},
  };

  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_s > 0.0 && secs > c.limit_s) o.require(false, "runtime over " + text::format_fixed(c.limit_s, 0) + " s");
    failed += !o.pass;
    std::printf("%s %2d %-26s %7.2fs  %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(work);
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
