#include "rvg/filtration_head.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "rvg/error.hpp"
#include "rvg/objectives.hpp"
#include "rvg/random.hpp"

namespace rvg {

namespace {

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

// y = M x for row-major M (rows x cols).
void matvec(std::span<const double> m, std::span<const double> x, std::span<double> y, int rows,
            int cols) noexcept {
  for (int r = 0; r < rows; ++r) {
    const double* row = m.data() + sz(r) * cols;
    double s = 0.0;
    for (int c = 0; c < cols; ++c) s += row[c] * x[c];
    y[r] = s;
  }
}

// y = M^T x
void matvec_t(std::span<const double> m, std::span<const double> x, std::span<double> y, int rows,
              int cols) noexcept {
  std::fill(y.begin(), y.end(), 0.0);
  for (int r = 0; r < rows; ++r) {
    const double* row = m.data() + sz(r) * cols;
    const double xr = x[r];
    if (xr == 0.0) continue;
    for (int c = 0; c < cols; ++c) y[c] += row[c] * xr;
  }
}

// G += a b^T
void outer_add(std::span<double> g, std::span<const double> a, std::span<const double> b) noexcept {
  const std::size_t cols = b.size();
  for (std::size_t r = 0; r < a.size(); ++r) {
    const double ar = a[r];
    if (ar == 0.0) continue;
    double* row = g.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += ar * b[c];
  }
}

void check_dim(std::size_t got, int want, const char* what) {
  if (got != sz(want)) {
    throw InvalidArgument(std::string(what) + ": width " + std::to_string(got) + ", expected " +
                          std::to_string(want));
  }
}

// Per-query attention terms, shared by every proposal of a sample.
struct QueryKey {
  std::vector<double> k, u;  // k = W_q q, u = W_k^T k
};

void query_key(const QueryEmbedding& q, const HeadParams& p, QueryKey& key) {
  const int d = p.dims.d;
  check_dim(q.size(), d, "attend query");
  key.k.assign(sz(d), 0.0);
  key.u.assign(sz(d), 0.0);
  matvec(p.wq, q, key.k, d, d);
  // (W_q q) . (W_k x) = (W_k^T W_q q) . x
  matvec_t(p.wk, key.k, key.u, d, d);
}

// Everything the backward pass needs for one proposal.
struct Trace {
  std::vector<double> attn, tbar, z, v;
  std::vector<double> pre1, hid;
  double s_logit = 0.0, s_lang = 0.0;
  std::vector<double> rpre, rhid;
  BoxDelta delta;
  double logit_det = 0.0, s_final = 0.0;
};

void forward_attention(const QueryKey& key, std::span<const FeatureVector> tokens, const HeadParams& p,
                       Trace& t) {
  const int d = p.dims.d;
  if (tokens.empty()) throw InvalidArgument("attend: empty token sequence");
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  t.attn.resize(tokens.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    check_dim(tokens[j].size(), d, "attend token");
    double s = 0.0;
    for (int c = 0; c < d; ++c) s += key.u[c] * tokens[j][c];
    t.attn[j] = s * inv_sqrt_d;
    top = std::max(top, t.attn[j]);
  }
  double denom = 0.0;
  for (double& a : t.attn) {
    a = std::exp(a - top);
    denom += a;
  }
  for (double& a : t.attn) a /= denom;

  t.tbar.assign(sz(d), 0.0);
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    const double a = t.attn[j];
    for (int c = 0; c < d; ++c) t.tbar[c] += a * tokens[j][c];
  }
  t.z.assign(sz(d), 0.0);
  matvec(p.wv, t.tbar, t.z, d, d);
}

void build_fused(std::span<const double> z, std::span<const double> g, std::span<const double> q,
                 int d, std::vector<double>& v) {
  check_dim(z.size(), d, "fused z_pool");
  check_dim(g.size(), d, "fused g_vec");
  check_dim(q.size(), d, "fused query");
  v.resize(3 * sz(d));
  std::copy(z.begin(), z.end(), v.begin());
  std::copy(g.begin(), g.end(), v.begin() + d);
  std::copy(q.begin(), q.end(), v.begin() + 2 * d);
}

void forward_score(const HeadParams& p, Trace& t) {
  const int h = p.dims.h, in = 3 * p.dims.d;
  t.pre1.assign(sz(h), 0.0);
  matvec(p.w1, t.v, t.pre1, h, in);
  t.hid.resize(sz(h));
  double s = p.b2[0];
  for (int i = 0; i < h; ++i) {
    t.pre1[i] += p.b1[i];
    t.hid[i] = std::max(0.0, t.pre1[i]);
    s += p.w2[i] * t.hid[i];
  }
  t.s_logit = s;
  t.s_lang = sigmoid(s);
}

void forward_refine(const HeadParams& p, Trace& t) {
  const int h = p.dims.h, in = 3 * p.dims.d;
  t.rpre.assign(sz(h), 0.0);
  matvec(p.ref_w1, t.v, t.rpre, h, in);
  t.rhid.resize(sz(h));
  for (int i = 0; i < h; ++i) {
    t.rpre[i] += p.ref_b1[i];
    t.rhid[i] = std::max(0.0, t.rpre[i]);
  }
  double out[4];
  matvec(p.ref_w2, t.rhid, out, 4, h);
  t.delta = {out[0] + p.ref_b2[0], out[1] + p.ref_b2[1], out[2] + p.ref_b2[2], out[3] + p.ref_b2[3]};
}

double det_logit(double p_det) {
  const double p = std::clamp(p_det, kDetClamp, 1.0 - kDetClamp);
  return std::log(p / (1.0 - p));
}

// Forward pass over a proposal list; refinement only for the top_m by s_lang.
std::vector<ProposalOutput> forward_all(const QueryEmbedding& q, std::span<const ProposalCandidate> props,
                                        const HeadParams& p, int top_m, std::vector<Trace>* traces,
                                        QueryKey* key_out = nullptr) {
  std::vector<Trace> local;
  std::vector<Trace>& tr = traces ? *traces : local;
  tr.resize(props.size());
  QueryKey local_key;
  QueryKey& key = key_out ? *key_out : local_key;
  query_key(q, p, key);
  std::vector<ProposalOutput> out(props.size());
  for (std::size_t i = 0; i < props.size(); ++i) {
    Trace& t = tr[i];
    forward_attention(key, props[i].roi_tokens, p, t);
    build_fused(t.z, props[i].g_vec, q, p.dims.d, t.v);
    forward_score(p, t);
    t.logit_det = det_logit(props[i].scored_box.score);
    t.s_final = sigmoid(p.alpha * t.s_lang + p.beta * t.logit_det);
    out[i].box = props[i].scored_box.box;
    out[i].p_det = props[i].scored_box.score;
    out[i].s_lang = t.s_lang;
    out[i].s_final = t.s_final;
    out[i].refined_box = out[i].box;
  }

  std::vector<std::size_t> order(props.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return out[a].s_lang > out[b].s_lang; });
  const std::size_t keep = std::min(order.size(), static_cast<std::size_t>(std::max(top_m, 0)));
  for (std::size_t r = 0; r < keep; ++r) {
    const std::size_t i = order[r];
    forward_refine(p, tr[i]);
    out[i].delta = tr[i].delta;
    out[i].refined_box = apply_delta(out[i].box, tr[i].delta);
    out[i].refined = true;
  }
  return out;
}

struct LossGrads {
  FilterLoss loss;
  std::vector<double> d_s_lang, d_s_final;
  std::vector<std::array<double, 4>> d_refined;
};

LossGrads filter_loss_with_grads(std::span<const ProposalOutput> outs, std::span<const Box> gt,
                                 const FilterLossConfig& cfg) {
  LossGrads g;
  g.d_s_lang.assign(outs.size(), 0.0);
  g.d_s_final.assign(outs.size(), 0.0);
  g.d_refined.assign(outs.size(), {0.0, 0.0, 0.0, 0.0});

  const auto labels = match_proposals(outs, gt, cfg);
  std::size_t n_cls = 0;
  for (const auto& l : labels) {
    if (l.label == 1) ++g.loss.positives;
    else if (l.label == 0) ++g.loss.negatives;
    else ++g.loss.ignored;
  }
  n_cls = g.loss.positives + g.loss.negatives;

  if (n_cls > 0) {
    std::vector<double> s_lab, y, sf_lab;
    for (std::size_t i = 0; i < outs.size(); ++i) {
      if (labels[i].label < 0) continue;
      s_lab.push_back(outs[i].s_lang);
      sf_lab.push_back(outs[i].s_final);
      y.push_back(labels[i].label);
    }
    g.loss.cls = bce(s_lab, y);
    g.loss.fuse = bce(sf_lab, y);
    const double inv = 1.0 / static_cast<double>(n_cls);
    for (std::size_t i = 0; i < outs.size(); ++i) {
      if (labels[i].label < 0) continue;
      g.d_s_lang[i] = cfg.lambda_cls * inv * bce_derivative(outs[i].s_lang, labels[i].label);
      g.d_s_final[i] = cfg.lambda_fuse * inv * bce_derivative(outs[i].s_final, labels[i].label);
    }
  }

  if (g.loss.positives > 0) {
    const double inv = 1.0 / static_cast<double>(g.loss.positives);
    for (std::size_t i = 0; i < outs.size(); ++i) {
      if (labels[i].label != 1) continue;
      const Box& r = outs[i].refined_box;
      const Box& t = gt[labels[i].gt_index];
      g.loss.l1 += l1_box_loss(r, t);
      const GiouGradient gg = giou_with_gradient(r, t);
      g.loss.giou += 1.0 - gg.value;
      const auto rc = r.coords(), tc = t.coords();
      for (int c = 0; c < 4; ++c) {
        const double diff = rc[c] - tc[c];
        const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        g.d_refined[i][c] = cfg.lambda_box * inv * (0.25 * sign - gg.d_pred[c]);
      }
    }
    g.loss.l1 *= inv;
    g.loss.giou *= inv;
  }
  g.loss.total = cfg.lambda_cls * g.loss.cls + cfg.lambda_box * (g.loss.l1 + g.loss.giou) +
                 cfg.lambda_fuse * g.loss.fuse;
  return g;
}

struct Scratch {
  std::vector<double> dz, drh, dpre, dtbar, da;
};

// dz += (first d columns of M)^T x for row-major M (rows x cols).
void add_leading_columns_t(std::span<const double> m, std::span<const double> x, std::span<double> dz,
                           int rows, int cols) noexcept {
  const std::size_t d = dz.size();
  for (int r = 0; r < rows; ++r) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    const double* row = m.data() + sz(r) * cols;
    for (std::size_t c = 0; c < d; ++c) dz[c] += row[c] * xr;
  }
}

// Accumulates d loss / d params for one proposal into `gr`. The query-key part
// is shared by the sample, so its input gradient is summed into `du`.
void backward_one(const ProposalCandidate& prop, const HeadParams& p, const Trace& t, const ProposalOutput& out,
                  double d_s_lang, double d_s_final, const std::array<double, 4>& d_refined, HeadParams& gr,
                  std::span<double> du, Scratch& sc) {
  const int d = p.dims.d, h = p.dims.h, in = 3 * d;
  sc.dz.assign(sz(d), 0.0);

  // Fusion: s_final = sigmoid(alpha * s + beta * logit(p_det)).
  const double dx = d_s_final * t.s_final * (1.0 - t.s_final);
  gr.alpha += dx * t.s_lang;
  gr.beta += dx * t.logit_det;
  d_s_lang += dx * p.alpha;

  // Refinement path.
  if (out.refined) {
    const auto jac = apply_delta_jacobian(out.box, t.delta);
    double d_delta[4] = {0.0, 0.0, 0.0, 0.0};
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) d_delta[c] += d_refined[r] * jac[r][c];
    }
    if (d_delta[0] != 0.0 || d_delta[1] != 0.0 || d_delta[2] != 0.0 || d_delta[3] != 0.0) {
      for (int c = 0; c < 4; ++c) gr.ref_b2[c] += d_delta[c];
      outer_add(gr.ref_w2, d_delta, t.rhid);
      sc.drh.resize(sz(h));
      matvec_t(p.ref_w2, d_delta, sc.drh, 4, h);
      for (int i = 0; i < h; ++i) {
        if (!(t.rpre[i] > 0.0)) sc.drh[i] = 0.0;
        gr.ref_b1[i] += sc.drh[i];
      }
      outer_add(gr.ref_w1, sc.drh, t.v);
      add_leading_columns_t(p.ref_w1, sc.drh, sc.dz, h, in);
    }
  }

  // Scoring path.
  const double d_logit = d_s_lang * t.s_lang * (1.0 - t.s_lang);
  if (d_logit != 0.0) {
    gr.b2[0] += d_logit;
    sc.dpre.resize(sz(h));
    for (int i = 0; i < h; ++i) {
      gr.w2[i] += d_logit * t.hid[i];
      sc.dpre[i] = t.pre1[i] > 0.0 ? d_logit * p.w2[i] : 0.0;
      gr.b1[i] += sc.dpre[i];
    }
    outer_add(gr.w1, sc.dpre, t.v);
    add_leading_columns_t(p.w1, sc.dpre, sc.dz, h, in);
  }

  // Only z depends on parameters among [z; g; q].
  if (std::all_of(sc.dz.begin(), sc.dz.end(), [](double x) { return x == 0.0; })) return;
  outer_add(gr.wv, sc.dz, t.tbar);
  sc.dtbar.resize(sz(d));
  matvec_t(p.wv, sc.dz, sc.dtbar, d, d);

  const auto& tokens = prop.roi_tokens;
  sc.da.resize(tokens.size());
  double mean_da = 0.0;
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    double s = 0.0;
    for (int c = 0; c < d; ++c) s += sc.dtbar[c] * tokens[j][c];
    sc.da[j] = s;
    mean_da += t.attn[j] * s;
  }
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    const double dl = t.attn[j] * (sc.da[j] - mean_da) * inv_sqrt_d;
    if (dl == 0.0) continue;
    for (int c = 0; c < d; ++c) du[c] += dl * tokens[j][c];
  }
}

// u = W_k^T k  =>  dW_k = k du^T, dk = W_k du;  k = W_q q  =>  dW_q = dk q^T.
void backward_query_key(const QueryEmbedding& q, const QueryKey& key, const HeadParams& p,
                        std::span<const double> du, HeadParams& gr) {
  const int d = p.dims.d;
  outer_add(gr.wk, key.k, du);
  std::vector<double> dk(sz(d));
  matvec(p.wk, du, dk, d, d);
  outer_add(gr.wq, dk, q);
}

}  // namespace

HeadParams HeadParams::zeros(HeadDims dims) {
  if (dims.d <= 0 || dims.h <= 0) throw InvalidArgument("HeadParams: dims must be positive");
  HeadParams p;
  p.dims = dims;
  const std::size_t d = sz(dims.d), h = sz(dims.h);
  p.wq.assign(d * d, 0.0);
  p.wk.assign(d * d, 0.0);
  p.wv.assign(d * d, 0.0);
  p.w1.assign(h * 3 * d, 0.0);
  p.b1.assign(h, 0.0);
  p.w2.assign(h, 0.0);
  p.b2.assign(1, 0.0);
  p.ref_w1.assign(h * 3 * d, 0.0);
  p.ref_b1.assign(h, 0.0);
  p.ref_w2.assign(4 * h, 0.0);
  p.ref_b2.assign(4, 0.0);
  p.alpha = 0.0;
  p.beta = 0.0;
  return p;
}

HeadParams HeadParams::init(HeadDims dims, std::uint64_t seed) {
  HeadParams p = zeros(dims);
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dims.d));
  for (auto* m : {&p.wq, &p.wk, &p.wv, &p.w1, &p.w2, &p.ref_w1, &p.ref_w2}) {
    for (double& v : *m) v = rng.uniform(-bound, bound);
  }
  p.alpha = 1.0;
  p.beta = 1.0;
  return p;
}

void HeadParams::axpy(double scale, const HeadParams& other) {
  std::vector<std::span<const double>> src;
  other.for_each_group([&](std::string_view, std::span<const double> v) { src.push_back(v); });
  std::size_t g = 0;
  for_each_group([&](std::string_view, std::span<double> v) {
    const auto& s = src[g++];
    if (s.size() != v.size()) throw InvalidArgument("HeadParams::axpy: shape mismatch");
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += scale * s[i];
  });
}

std::size_t HeadParams::parameter_count() const {
  std::size_t n = 0;
  for_each_group([&](std::string_view, std::span<const double> v) { n += v.size(); });
  return n;
}

bool HeadParams::all_finite() const {
  bool ok = true;
  for_each_group([&](std::string_view, std::span<const double> v) {
    ok = ok && std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  });
  return ok;
}

void HeadParams::validate() const {
  const HeadParams shape = zeros(dims);
  std::vector<std::size_t> want;
  shape.for_each_group([&](std::string_view, std::span<const double> v) { want.push_back(v.size()); });
  std::size_t g = 0;
  for_each_group([&](std::string_view name, std::span<const double> v) {
    if (v.size() != want[g++]) {
      throw InvalidArgument("HeadParams: group '" + std::string(name) + "' has wrong size");
    }
  });
  if (!all_finite()) throw InvalidArgument("HeadParams: non-finite parameter");
}

std::vector<double> attention_weights(const QueryEmbedding& q, std::span<const FeatureVector> tokens,
                                      const HeadParams& params) {
  QueryKey key;
  query_key(q, params, key);
  Trace t;
  forward_attention(key, tokens, params, t);
  return t.attn;
}

FeatureVector attend(const QueryEmbedding& q, std::span<const FeatureVector> tokens,
                     const HeadParams& params) {
  QueryKey key;
  query_key(q, params, key);
  Trace t;
  forward_attention(key, tokens, params, t);
  return t.z;
}

double score(std::span<const double> z_pool, std::span<const double> g_vec, std::span<const double> q,
             const HeadParams& params) {
  Trace t;
  build_fused(z_pool, g_vec, q, params.dims.d, t.v);
  forward_score(params, t);
  return t.s_lang;
}

BoxDelta refine(std::span<const double> z_pool, std::span<const double> g_vec, std::span<const double> q,
                const HeadParams& params) {
  Trace t;
  build_fused(z_pool, g_vec, q, params.dims.d, t.v);
  forward_refine(params, t);
  return t.delta;
}

double fuse_score(double s_lang, double p_det, double alpha, double beta) {
  return sigmoid(alpha * s_lang + beta * det_logit(p_det));
}

std::vector<ProposalOutput> evaluate_proposals(const QueryEmbedding& q,
                                               std::span<const ProposalCandidate> proposals,
                                               const HeadParams& params, int top_m) {
  return forward_all(q, proposals, params, top_m, nullptr);
}

std::vector<FilterDecision> run_head(const QueryEmbedding& q, std::span<const ProposalCandidate> proposals,
                                     const HeadParams& params, int top_m, double tau) {
  const auto outs = forward_all(q, proposals, params, top_m, nullptr);
  std::vector<FilterDecision> decisions;
  for (std::size_t i = 0; i < outs.size(); ++i) {
    if (!outs[i].refined) continue;
    decisions.push_back({i, outs[i].s_lang, outs[i].refined_box, outs[i].s_final, outs[i].s_final > tau});
  }
  std::stable_sort(decisions.begin(), decisions.end(),
                   [](const FilterDecision& a, const FilterDecision& b) { return a.s_final > b.s_final; });
  return decisions;
}

std::vector<ProposalLabel> match_proposals(std::span<const ProposalOutput> outputs,
                                           std::span<const Box> gt_boxes, const FilterLossConfig& cfg) {
  std::vector<ProposalLabel> labels(outputs.size());
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    double best = 0.0;
    int best_j = -1;
    for (std::size_t j = 0; j < gt_boxes.size(); ++j) {
      const double v = iou(outputs[i].box, gt_boxes[j]);
      if (best_j < 0 || v > best) {
        best = v;
        best_j = static_cast<int>(j);
      }
    }
    if (best_j >= 0 && best > cfg.positive_iou) labels[i] = {1, best_j};
    else if (best < cfg.negative_iou) labels[i] = {0, best_j};
    else labels[i] = {-1, best_j};
  }
  return labels;
}

FilterLoss filter_loss(std::span<const ProposalOutput> outputs, std::span<const Box> gt_boxes,
                       const FilterLossConfig& cfg) {
  if (cfg.lambda_cls < 0.0 || cfg.lambda_box < 0.0 || cfg.lambda_fuse < 0.0) {
    throw InvalidArgument("filter_loss: loss weights must be non-negative");
  }
  return filter_loss_with_grads(outputs, gt_boxes, cfg).loss;
}

LossAndGradient loss_and_gradient(const HeadParams& params, std::span<const TrainingSample> batch,
                                  const FilterLossConfig& cfg, int top_m) {
  if (batch.empty()) throw InvalidArgument("loss_and_gradient: empty batch");
  LossAndGradient result{FilterLoss{}, HeadParams::zeros(params.dims)};
  std::vector<Trace> traces;
  QueryKey key;
  Scratch scratch;
  std::vector<double> du;
  for (const TrainingSample& sample : batch) {
    const auto outs = forward_all(sample.query, sample.proposals, params, top_m, &traces, &key);
    const LossGrads lg = filter_loss_with_grads(outs, sample.gt_boxes, cfg);
    FilterLoss& acc = result.loss;
    acc.total += lg.loss.total;
    acc.cls += lg.loss.cls;
    acc.l1 += lg.loss.l1;
    acc.giou += lg.loss.giou;
    acc.fuse += lg.loss.fuse;
    acc.positives += lg.loss.positives;
    acc.negatives += lg.loss.negatives;
    acc.ignored += lg.loss.ignored;
    du.assign(sz(params.dims.d), 0.0);
    for (std::size_t i = 0; i < outs.size(); ++i) {
      backward_one(sample.proposals[i], params, traces[i], outs[i], lg.d_s_lang[i], lg.d_s_final[i],
                   lg.d_refined[i], result.gradient, du, scratch);
    }
    backward_query_key(sample.query, key, params, du, result.gradient);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  result.loss.total *= inv;
  result.loss.cls *= inv;
  result.loss.l1 *= inv;
  result.loss.giou *= inv;
  result.loss.fuse *= inv;
  result.gradient.for_each_group([&](std::string_view, std::span<double> v) {
    for (double& x : v) x *= inv;
  });
  return result;
}

HeadParams grad(const HeadParams& params, std::span<const TrainingSample> batch,
                const FilterLossConfig& cfg, int top_m) {
  return loss_and_gradient(params, batch, cfg, top_m).gradient;
}

double batch_loss(const HeadParams& params, std::span<const TrainingSample> batch,
                  const FilterLossConfig& cfg, int top_m) {
  if (batch.empty()) throw InvalidArgument("batch_loss: empty batch");
  double total = 0.0;
  for (const TrainingSample& sample : batch) {
    const auto outs = forward_all(sample.query, sample.proposals, params, top_m, nullptr);
    total += filter_loss(outs, sample.gt_boxes, cfg).total;
  }
  return total / static_cast<double>(batch.size());
}

TrainResult train(std::span<const TrainingSample> samples, const TrainConfig& config) {
  if (samples.empty()) throw InvalidArgument("train: no training scenes");
  TrainResult result{HeadParams::init(config.dims, config.seed), {}};
  FilterLossConfig loss = config.loss;
  if (!config.refine) {
    for (auto* m : {&result.params.ref_w1, &result.params.ref_b1, &result.params.ref_w2, &result.params.ref_b2}) {
      std::fill(m->begin(), m->end(), 0.0);
    }
    loss.lambda_box = 0.0;
  }
  result.loss_curve.reserve(static_cast<std::size_t>(std::max(config.steps, 0)));
  for (int step = 0; step < config.steps; ++step) {
    LossAndGradient lg = loss_and_gradient(result.params, samples, loss, config.top_m);
    if (!std::isfinite(lg.loss.total)) {
      throw TrainingError(static_cast<std::size_t>(step), "non-finite loss");
    }
    result.loss_curve.push_back(lg.loss.total);
    result.params.axpy(-config.lr, lg.gradient);
  }
  return result;
}

using ojson = nlohmann::ordered_json;

namespace {

struct Shape {
  int rows, cols;
};

Shape group_shape(std::string_view name, HeadDims dims) {
  const int d = dims.d, h = dims.h;
  if (name == "wq" || name == "wk" || name == "wv") return {d, d};
  if (name == "w1" || name == "ref_w1") return {h, 3 * d};
  if (name == "b1" || name == "ref_b1") return {h, 1};
  if (name == "w2") return {1, h};
  if (name == "b2" || name == "alpha" || name == "beta") return {1, 1};
  if (name == "ref_w2") return {4, h};
  return {4, 1};  // ref_b2
}

}  // namespace

void write_checkpoint(std::ostream& os, const HeadParams& params) {
  params.validate();
  ojson j;
  j["version"] = "HEAD v1";
  j["d"] = params.dims.d;
  j["h"] = params.dims.h;
  ojson maps = ojson::object();
  params.for_each_group([&](std::string_view name, std::span<const double> v) {
    const Shape s = group_shape(name, params.dims);
    ojson m;
    m["shape"] = {s.rows, s.cols};
    m["data"] = std::vector<double>(v.begin(), v.end());
    maps[std::string(name)] = std::move(m);
  });
  j["maps"] = std::move(maps);
  os << j.dump(1) << '\n';
}

HeadParams read_checkpoint(std::istream& is) {
  ojson j;
  try {
    j = ojson::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("checkpoint: ") + e.what());
  }
  try {
    if (j.at("version").get<std::string>() != "HEAD v1") {
      throw ParseError(0, "checkpoint: unsupported version");
    }
    HeadParams p = HeadParams::zeros({j.at("d").get<int>(), j.at("h").get<int>()});
    const ojson& maps = j.at("maps");
    p.for_each_group([&](std::string_view name, std::span<double> v) {
      const ojson& m = maps.at(std::string(name));
      const Shape s = group_shape(name, p.dims);
      const auto shape = m.at("shape").get<std::vector<int>>();
      if (shape != std::vector<int>{s.rows, s.cols}) {
        throw ParseError(0, "checkpoint: map '" + std::string(name) + "' has the wrong shape");
      }
      const auto data = m.at("data").get<std::vector<double>>();
      if (data.size() != v.size()) {
        throw ParseError(0, "checkpoint: map '" + std::string(name) + "' has the wrong length");
      }
      std::copy(data.begin(), data.end(), v.begin());
    });
    if (!p.all_finite()) throw ParseError(0, "checkpoint: non-finite parameter");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("checkpoint: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ParseError(0, std::string("checkpoint: ") + e.what());
  }
}

void write_checkpoint_file(const std::string& path, const HeadParams& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_checkpoint(os, params);
}

HeadParams read_checkpoint_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open '" + path + "'");
  return read_checkpoint(is);
}

}  // namespace rvg
