#include <gtest/gtest.h>

#include <sstream>

#include "rvg/ablation.hpp"
#include "rvg/error.hpp"
#include "rvg/synth.hpp"
#include "rvg/trajectory_io.hpp"

using namespace rvg;

namespace {

std::string scene_digest(const std::vector<SyntheticScene>& scenes) {
  std::ostringstream os;
  os.precision(17);
  for (const SyntheticScene& s : scenes) {
    std::vector<Trajectory> ts;
    for (const auto& o : s.objects) ts.push_back(o.trajectory);
    write_trajectories(os, ts);
    for (double q : s.query) os << q << ' ';
    for (const auto& p : s.pyramids)
      for (const auto& l : p.levels)
        for (double v : l.data()) os << v << ' ';
    for (const auto& p : s.proposals) os << p.box.x1 << ' ' << p.score << ' ';
    write_mask_video(os, s.gt_masks);
    os << s.target << ' ' << s.distractors << '\n';
  }
  return os.str();
}

ExperimentGrid small_grid() {
  ExperimentGrid g;
  g.train_scenes = 24;
  g.test_scenes = 12;
  g.train.steps = 40;
  return g;
}

}  // namespace

TEST(GenScenes, DeterministicPerSeed) {
  SceneConfig c;
  c.count = 4;
  EXPECT_EQ(scene_digest(gen_scenes(c)), scene_digest(gen_scenes(c)));
  SceneConfig d = c;
  d.seed = 8;
  EXPECT_NE(scene_digest(gen_scenes(c)), scene_digest(gen_scenes(d)));
  // Scene i does not depend on how many scenes were requested.
  EXPECT_EQ(scene_digest({gen_scene(c, 2)}), scene_digest({gen_scenes(c)[2]}));
}

TEST(GenScenes, CountsAndInvariants) {
  SceneConfig c;
  c.count = 10;
  c.n_objects = 3;
  const auto scenes = gen_scenes(c);
  std::size_t trajectories = 0;
  for (const SyntheticScene& s : scenes) {
    trajectories += s.objects.size();
    EXPECT_LT(s.target, s.objects.size());
    EXPECT_EQ(s.pyramids.size(), static_cast<std::size_t>(c.frames));
    EXPECT_EQ(s.gt_masks.frames.size(), static_cast<std::size_t>(c.frames));
    EXPECT_EQ(s.query.size(), static_cast<std::size_t>(head_width(c)));
    for (const auto& p : s.pyramids) EXPECT_NO_THROW(p.validate());
    for (const auto& o : s.objects) EXPECT_EQ(o.trajectory.points.size(), static_cast<std::size_t>(c.frames));
  }
  EXPECT_EQ(trajectories, 30u);
  c.count = 0;
  EXPECT_THROW(gen_scenes(c), InvalidArgument);
}

TEST(GenScenes, NoiselessSingleObjectPoolsToIdentity) {
  SceneConfig c;
  c.count = 5;
  c.n_objects = 1;
  c.noise = 0.0;
  for (const SyntheticScene& s : gen_scenes(c)) {
    const SceneObject& o = s.objects[0];
    for (int f = 0; f < s.frames; ++f) {
      const FeatureVector g = crop_feature(s.pyramids[f], o.trajectory.points[f].box, c.roi_size);
      ASSERT_EQ(g.size(), o.identity.size());
      for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(g[k], o.identity[k], 1e-12);
    }
  }
}

TEST(GenScenes, CandidateLayout) {
  SceneConfig c;
  const SyntheticScene s = gen_scene(c, 0);
  const auto cands = scene_candidates(s, c);
  ASSERT_EQ(cands.size(), s.proposals.size());
  const std::size_t w = static_cast<std::size_t>(head_width(c));
  for (const auto& cand : cands) {
    EXPECT_EQ(cand.g_vec.size(), w);
    EXPECT_EQ(cand.roi_tokens.size(), static_cast<std::size_t>(c.roi_size * c.roi_size) + 1);
    for (const auto& t : cand.roi_tokens) EXPECT_EQ(t.size(), w);
    EXPECT_EQ(cand.roi_tokens.back(), FeatureVector(w, 0.0));
  }
}

TEST(Ablation, OneCellGivesOneRow) {
  ExperimentGrid g = small_grid();
  g.tsf_modes = {TsfMode::train_only};
  g.box_prompt = {true};
  const AblationResult r = run_ablation(g);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].tsf_mode, TsfMode::train_only);
  EXPECT_TRUE(r.rows[0].box_prompt);
  EXPECT_GE(r.rows[0].sel_acc, 0.0);
  EXPECT_LE(r.rows[0].sel_acc, 1.0);
  EXPECT_GE(r.rows[0].recall, r.rows[0].sel_acc);
}

TEST(Ablation, ZeroLevelCorruptionMatchesCleanCell) {
  ExperimentGrid g = small_grid();
  g.tsf_modes = {TsfMode::train_only};
  g.box_prompt = {true};
  g.corruptions = {{CorruptionKind::none, 0.0},
                   {CorruptionKind::jitter, 0.0},
                   {CorruptionKind::id_switch, 0.0},
                   {CorruptionKind::dropout, 0.0}};
  const AblationResult r = run_ablation(g);
  ASSERT_EQ(r.rows.size(), 4u);
  for (std::size_t i = 1; i < 4; ++i) {
    EXPECT_EQ(r.rows[i].sel_acc, r.rows[0].sel_acc);
    EXPECT_EQ(r.rows[i].recall, r.rows[0].recall);
  }
}

TEST(Ablation, GridOrderAndDeterminism) {
  ExperimentGrid g = small_grid();
  const AblationResult a = run_ablation(g), b = run_ablation(g);
  EXPECT_EQ(a.rows, b.rows);
  ASSERT_EQ(a.rows.size(), 6u);
  std::size_t k = 0;
  for (TsfMode m : g.tsf_modes)
    for (bool box : {false, true}) {
      EXPECT_EQ(a.rows[k].tsf_mode, m);
      EXPECT_EQ(a.rows[k].box_prompt, box);
      ++k;
    }
  g.tsf_modes.clear();
  EXPECT_THROW(run_ablation(g), InvalidArgument);
}

TEST(ResultsCsv, RoundTripsThroughRenderer) {
  const std::vector<AblationRow> rows{
      {TsfMode::none, false, CorruptionKind::none, 0.0, 0.34, 0.9, 7},
      {TsfMode::train_only, true, CorruptionKind::jitter, 0.05, 0.875, 0.92, 7},
      {TsfMode::train_and_inference, true, CorruptionKind::dropout, 0.2, 1.0 / 3.0, 0.5, 11}};
  std::ostringstream a;
  write_results_csv(a, rows);
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')), kResultsHeader);
  std::istringstream in(a.str());
  const auto back = read_results_csv(in);
  std::ostringstream rendered;
  render_report(rendered, back, ReportFormat::csv);
  EXPECT_EQ(rendered.str(), a.str());
  std::istringstream again(rendered.str());
  std::ostringstream b;
  write_results_csv(b, read_results_csv(again));
  EXPECT_EQ(b.str(), a.str());

  std::ostringstream table;
  render_report(table, back, ReportFormat::table);
  EXPECT_NE(table.str().find("box-IoU selection accuracy"), std::string::npos);

  std::istringstream bad(std::string(kResultsHeader) + "\nnone,on,none,0,x,0.5,7\n");
  try {
    read_results_csv(bad);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}
