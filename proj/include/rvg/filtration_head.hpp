#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "rvg/feature_grid.hpp"
#include "rvg/geometry.hpp"

namespace rvg {

using QueryEmbedding = FeatureVector;

struct HeadDims {
  int d = 16;  // token / query width
  int h = 16;  // hidden width of the scoring and refinement MLPs

  friend bool operator==(const HeadDims&, const HeadDims&) = default;
};

/// Learnable parameters of the filtration head. Matrices are row-major.
struct HeadParams {
  HeadDims dims;
  std::vector<double> wq, wk, wv;      // d x d
  std::vector<double> w1, b1;          // h x 3d, h
  std::vector<double> w2, b2;          // 1 x h, 1
  std::vector<double> ref_w1, ref_b1;  // h x 3d, h
  std::vector<double> ref_w2, ref_b2;  // 4 x h, 4
  double alpha = 1.0;
  double beta = 1.0;

  static HeadParams zeros(HeadDims dims);
  /// Maps uniform(-1/sqrt(d), 1/sqrt(d)), biases zero, alpha = beta = 1.
  static HeadParams init(HeadDims dims, std::uint64_t seed);

  /// Visits (name, values) for every parameter group in a fixed order.
  template <class F>
  void for_each_group(F&& f) {
    f(std::string_view("wq"), std::span<double>(wq));
    f(std::string_view("wk"), std::span<double>(wk));
    f(std::string_view("wv"), std::span<double>(wv));
    f(std::string_view("w1"), std::span<double>(w1));
    f(std::string_view("b1"), std::span<double>(b1));
    f(std::string_view("w2"), std::span<double>(w2));
    f(std::string_view("b2"), std::span<double>(b2));
    f(std::string_view("ref_w1"), std::span<double>(ref_w1));
    f(std::string_view("ref_b1"), std::span<double>(ref_b1));
    f(std::string_view("ref_w2"), std::span<double>(ref_w2));
    f(std::string_view("ref_b2"), std::span<double>(ref_b2));
    f(std::string_view("alpha"), std::span<double>(&alpha, 1));
    f(std::string_view("beta"), std::span<double>(&beta, 1));
  }
  template <class F>
  void for_each_group(F&& f) const {
    const_cast<HeadParams*>(this)->for_each_group(
        [&](std::string_view name, std::span<double> v) { f(name, std::span<const double>(v)); });
  }

  /// this += scale * other
  void axpy(double scale, const HeadParams& other);
  std::size_t parameter_count() const;
  bool all_finite() const;
  /// Throws InvalidArgument when a group's size disagrees with dims.
  void validate() const;

  friend bool operator==(const HeadParams&, const HeadParams&) = default;
};

struct ProposalCandidate {
  ScoredBox scored_box;                   // proposal box and objectness p_det
  std::vector<FeatureVector> roi_tokens;  // pooled ROI cells, width d
  FeatureVector g_vec;                    // pooled summary, width d
};

struct FilterDecision {
  std::size_t index = 0;  // position in the proposal list
  double s_lang = 0.0;
  Box refined_box;
  double s_final = 0.0;
  bool selected = false;
};

inline constexpr double kDetClamp = 1e-6;
inline constexpr int kDefaultTopM = 20;
inline constexpr double kDefaultTau = 0.5;

/// Softmax attention weights of the query over the tokens.
std::vector<double> attention_weights(const QueryEmbedding& q, std::span<const FeatureVector> tokens,
                                      const HeadParams& params);

/// Attention-weighted value mean A (W_v tokens). Throws on an empty token list.
FeatureVector attend(const QueryEmbedding& q, std::span<const FeatureVector> tokens,
                     const HeadParams& params);

/// sigmoid(w2 . relu(W1 [z; g; q] + b1) + b2)
double score(std::span<const double> z_pool, std::span<const double> g_vec,
             std::span<const double> q, const HeadParams& params);

/// Two-layer ReLU regression head on [z; g; q].
BoxDelta refine(std::span<const double> z_pool, std::span<const double> g_vec,
                std::span<const double> q, const HeadParams& params);

/// sigmoid(alpha * s_lang + beta * logit(p_det)), p_det clamped to [1e-6, 1 - 1e-6].
double fuse_score(double s_lang, double p_det, double alpha, double beta);

/// Per-proposal head outputs in input order. Only the top_m proposals by s_lang
/// (stable) are refined; the rest keep their input box.
struct ProposalOutput {
  Box box;
  double p_det = 0.0;
  double s_lang = 0.0;
  double s_final = 0.0;
  BoxDelta delta;
  Box refined_box;
  bool refined = false;
};

std::vector<ProposalOutput> evaluate_proposals(const QueryEmbedding& q,
                                               std::span<const ProposalCandidate> proposals,
                                               const HeadParams& params, int top_m = kDefaultTopM);

/// Decisions for the top_m proposals, sorted by s_final descending (ties by input
/// order). selected is s_final > tau.
std::vector<FilterDecision> run_head(const QueryEmbedding& q, std::span<const ProposalCandidate> proposals,
                                     const HeadParams& params, int top_m = kDefaultTopM,
                                     double tau = kDefaultTau);

struct FilterLossConfig {
  double lambda_cls = 1.0;
  double lambda_box = 2.0;
  /// Weight of the BCE on the fused score, the only term that reaches alpha and beta.
  double lambda_fuse = 0.1;
  double positive_iou = 0.5;  // IoU > this is positive
  double negative_iou = 0.2;  // IoU < this is negative
};

struct ProposalLabel {
  int label = -1;  // 1 positive, 0 negative, -1 ignored
  int gt_index = -1;
};

/// Labels by max IoU of the input (unrefined) box against the ground truth.
std::vector<ProposalLabel> match_proposals(std::span<const ProposalOutput> outputs,
                                           std::span<const Box> gt_boxes, const FilterLossConfig& cfg);

struct FilterLoss {
  double total = 0.0;
  double cls = 0.0;   // BCE on s_lang over labelled proposals
  double l1 = 0.0;    // mean corner L1 over positives
  double giou = 0.0;  // mean (1 - GIoU) over positives
  double fuse = 0.0;  // BCE on s_final over labelled proposals
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t ignored = 0;
};

/// lambda_cls * cls + lambda_box * (l1 + giou) + lambda_fuse * fuse.
FilterLoss filter_loss(std::span<const ProposalOutput> outputs, std::span<const Box> gt_boxes,
                       const FilterLossConfig& cfg = {});

struct TrainingSample {
  QueryEmbedding query;
  std::vector<ProposalCandidate> proposals;
  std::vector<Box> gt_boxes;
};

struct LossAndGradient {
  FilterLoss loss;  // batch means
  HeadParams gradient;
};

/// Batch-mean filter loss and its analytic gradient for every parameter group.
LossAndGradient loss_and_gradient(const HeadParams& params, std::span<const TrainingSample> batch,
                                  const FilterLossConfig& cfg = {}, int top_m = kDefaultTopM);

HeadParams grad(const HeadParams& params, std::span<const TrainingSample> batch,
                const FilterLossConfig& cfg = {}, int top_m = kDefaultTopM);

double batch_loss(const HeadParams& params, std::span<const TrainingSample> batch,
                  const FilterLossConfig& cfg = {}, int top_m = kDefaultTopM);

struct TrainConfig {
  double lr = 0.05;
  int steps = 500;
  std::uint64_t seed = 7;
  int top_m = kDefaultTopM;
  double tau = kDefaultTau;
  HeadDims dims;
  FilterLossConfig loss;
  /// false trains a score-only head: refinement maps stay zero and lambda_box is ignored.
  bool refine = true;
};

struct TrainResult {
  HeadParams params;
  std::vector<double> loss_curve;  // loss before each update
};

/// Full-batch gradient descent from HeadParams::init(dims, seed).
/// Throws TrainingError on a non-finite loss.
TrainResult train(std::span<const TrainingSample> samples, const TrainConfig& config);

// HEAD v1 checkpoints (JSON).
void write_checkpoint(std::ostream& os, const HeadParams& params);
HeadParams read_checkpoint(std::istream& is);
void write_checkpoint_file(const std::string& path, const HeadParams& params);
HeadParams read_checkpoint_file(const std::string& path);

}  // namespace rvg
