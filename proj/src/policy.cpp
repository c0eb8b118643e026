#include "rldtf/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace rldtf {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluK = 0.044715;

using CMap = Eigen::Map<const Mat>;
using MMap = Eigen::Map<Mat>;
using CRow = Eigen::Map<const RowVec>;
using MRow = Eigen::Map<RowVec>;

struct LayerOffsets {
  std::size_t ln1_g, ln1_b, w_qkv, b_qkv, w_o, b_o, ln2_g, ln2_b, w_fc, b_fc, w_proj, b_proj;
};

struct BackboneOffsets {
  std::size_t wte, wpe, lnf_g, lnf_b;
  std::vector<LayerOffsets> layers;
};

struct Offsets {
  std::vector<BackboneOffsets> backbones;
  std::size_t lm_w, lm_b, value_w, value_b;
};

std::string bb_name(int b, const std::string& s) { return "bb" + std::to_string(b) + "." + s; }
std::string layer_name(int b, int l, const std::string& s) {
  return bb_name(b, "l" + std::to_string(l) + "." + s);
}

Offsets offsets_of(const ParamLayout& layout, const ModelConfig& cfg) {
  Offsets o;
  const int n_bb = cfg.split_backbone ? 2 : 1;
  for (int b = 0; b < n_bb; ++b) {
    BackboneOffsets bo;
    bo.wte = layout.find(bb_name(b, "wte")).offset;
    bo.wpe = layout.find(bb_name(b, "wpe")).offset;
    bo.lnf_g = layout.find(bb_name(b, "lnf.g")).offset;
    bo.lnf_b = layout.find(bb_name(b, "lnf.b")).offset;
    for (int l = 0; l < cfg.n_layers; ++l) {
      auto f = [&](const char* s) { return layout.find(layer_name(b, l, s)).offset; };
      bo.layers.push_back({f("ln1.g"), f("ln1.b"), f("attn.w_qkv"), f("attn.b_qkv"), f("attn.w_o"), f("attn.b_o"),
                           f("ln2.g"), f("ln2.b"), f("mlp.w_fc"), f("mlp.b_fc"), f("mlp.w_proj"), f("mlp.b_proj")});
    }
    o.backbones.push_back(std::move(bo));
  }
  o.lm_w = layout.find("lm.w").offset;
  o.lm_b = layout.find("lm.b").offset;
  o.value_w = layout.find("value.w").offset;
  o.value_b = layout.find("value.b").offset;
  return o;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluK * x * x * x))); }

double gelu_grad(double x) {
  const double t = std::tanh(kGeluC * (x + kGeluK * x * x * x));
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluK * x * x);
}

// y = (x - mean) * rstd * g + b, row-wise.
void layernorm(const Mat& x, const double* g, const double* b, Mat& xhat, Vec& rstd, Mat& y) {
  const Eigen::Index n = x.rows(), d = x.cols();
  xhat.resize(n, d);
  rstd.resize(n);
  y.resize(n, d);
  const CRow gain(g, d), bias(b, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mean = x.row(i).mean();
    const double var = (x.row(i).array() - mean).square().mean();
    rstd(i) = 1.0 / std::sqrt(var + kLnEps);
    xhat.row(i) = (x.row(i).array() - mean) * rstd(i);
    y.row(i) = xhat.row(i).cwiseProduct(gain) + bias;
  }
}

// Returns dL/dx; accumulates dL/dg, dL/db.
Mat layernorm_backward(const Mat& dy, const Mat& xhat, const Vec& rstd, const double* g, double* dg, double* db) {
  const Eigen::Index n = dy.rows(), d = dy.cols();
  const CRow gain(g, d);
  MRow dgain(dg, d), dbias(db, d);
  dgain += dy.cwiseProduct(xhat).colwise().sum();
  dbias += dy.colwise().sum();
  Mat dx(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const RowVec dxhat = dy.row(i).cwiseProduct(gain);
    const double m1 = dxhat.mean();
    const double m2 = dxhat.cwiseProduct(xhat.row(i)).mean();
    dx.row(i) = rstd(i) * (dxhat.array() - m1 - xhat.row(i).array() * m2).matrix();
  }
  return dx;
}

void check_length(const ModelConfig& cfg, std::size_t n) {
  if (n == 0) throw std::invalid_argument("forward on empty sequence");
  if (n > static_cast<std::size_t>(cfg.max_len))
    throw SequenceTooLong("sequence length " + std::to_string(n) + " exceeds max_len " + std::to_string(cfg.max_len));
}

void backbone_forward(const ModelConfig& cfg, const BackboneOffsets& o, const double* p, std::span<const Token> tokens,
                      BackboneTrace& tr) {
  const int d = cfg.d_model, dh = d / cfg.n_heads, f = cfg.d_ff;
  const Eigen::Index n = static_cast<Eigen::Index>(tokens.size());
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  tr.tokens.assign(tokens.begin(), tokens.end());
  tr.layers.resize(static_cast<std::size_t>(cfg.n_layers));

  const CMap wte(p + o.wte, cfg.vocab_size, d), wpe(p + o.wpe, cfg.max_len, d);
  Mat x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Token t = tokens[static_cast<std::size_t>(i)];
    if (t < 0 || t >= cfg.vocab_size) throw std::out_of_range("token id outside vocabulary");
    x.row(i) = wte.row(t) + wpe.row(i);
  }

  for (int l = 0; l < cfg.n_layers; ++l) {
    const LayerOffsets& lo = o.layers[static_cast<std::size_t>(l)];
    auto& L = tr.layers[static_cast<std::size_t>(l)];
    L.x_in = x;
    Mat a;
    layernorm(x, p + lo.ln1_g, p + lo.ln1_b, L.xhat1, L.rstd1, a);
    L.qkv.noalias() = a * CMap(p + lo.w_qkv, d, 3 * d);
    L.qkv.rowwise() += CRow(p + lo.b_qkv, 3 * d);
    L.att_cat.setZero(n, d);
    L.probs.resize(static_cast<std::size_t>(cfg.n_heads));
    for (int h = 0; h < cfg.n_heads; ++h) {
      const auto q = L.qkv.middleCols(h * dh, dh);
      const auto k = L.qkv.middleCols(d + h * dh, dh);
      const auto v = L.qkv.middleCols(2 * d + h * dh, dh);
      Mat s = (q * k.transpose()) * scale;
      Mat& P = L.probs[static_cast<std::size_t>(h)];
      P.setZero(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double mx = s.row(i).head(i + 1).maxCoeff();
        double z = 0.0;
        for (Eigen::Index j = 0; j <= i; ++j) {
          P(i, j) = std::exp(s(i, j) - mx);
          z += P(i, j);
        }
        P.row(i).head(i + 1) /= z;
      }
      L.att_cat.middleCols(h * dh, dh).noalias() = P * v;
    }
    x.noalias() += L.att_cat * CMap(p + lo.w_o, d, d);
    x.rowwise() += CRow(p + lo.b_o, d);
    L.x_mid = x;
    Mat m;
    layernorm(x, p + lo.ln2_g, p + lo.ln2_b, L.xhat2, L.rstd2, m);
    L.fc_pre.noalias() = m * CMap(p + lo.w_fc, d, f);
    L.fc_pre.rowwise() += CRow(p + lo.b_fc, f);
    L.fc_act = L.fc_pre.unaryExpr([](double z) { return gelu(z); });
    x.noalias() += L.fc_act * CMap(p + lo.w_proj, f, d);
    x.rowwise() += CRow(p + lo.b_proj, d);
  }
  tr.x_final = x;
  layernorm(x, p + o.lnf_g, p + o.lnf_b, tr.xhat_f, tr.rstd_f, tr.hidden);
}

void backbone_backward(const ModelConfig& cfg, const BackboneOffsets& o, const double* p, double* g,
                       const BackboneTrace& tr, const Mat& dhidden) {
  const int d = cfg.d_model, dh = d / cfg.n_heads, f = cfg.d_ff;
  const Eigen::Index n = static_cast<Eigen::Index>(tr.tokens.size());
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Mat dx = layernorm_backward(dhidden, tr.xhat_f, tr.rstd_f, p + o.lnf_g, g + o.lnf_g, g + o.lnf_b);

  for (int l = cfg.n_layers - 1; l >= 0; --l) {
    const LayerOffsets& lo = o.layers[static_cast<std::size_t>(l)];
    const auto& L = tr.layers[static_cast<std::size_t>(l)];

    // MLP sub-block
    MMap(g + lo.w_proj, f, d).noalias() += L.fc_act.transpose() * dx;
    MRow(g + lo.b_proj, d) += dx.colwise().sum();
    Mat dpre = dx * CMap(p + lo.w_proj, f, d).transpose();
    dpre.array() *= L.fc_pre.unaryExpr([](double z) { return gelu_grad(z); }).array();
    Mat m = L.xhat2.array().rowwise() * CRow(p + lo.ln2_g, d).array();
    m.rowwise() += CRow(p + lo.ln2_b, d);
    MMap(g + lo.w_fc, d, f).noalias() += m.transpose() * dpre;
    MRow(g + lo.b_fc, f) += dpre.colwise().sum();
    const Mat dm = dpre * CMap(p + lo.w_fc, d, f).transpose();
    dx += layernorm_backward(dm, L.xhat2, L.rstd2, p + lo.ln2_g, g + lo.ln2_g, g + lo.ln2_b);

    // attention sub-block
    MMap(g + lo.w_o, d, d).noalias() += L.att_cat.transpose() * dx;
    MRow(g + lo.b_o, d) += dx.colwise().sum();
    const Mat datt = dx * CMap(p + lo.w_o, d, d).transpose();
    Mat dqkv = Mat::Zero(n, 3 * d);
    for (int h = 0; h < cfg.n_heads; ++h) {
      const auto q = L.qkv.middleCols(h * dh, dh);
      const auto k = L.qkv.middleCols(d + h * dh, dh);
      const auto v = L.qkv.middleCols(2 * d + h * dh, dh);
      const Mat& P = L.probs[static_cast<std::size_t>(h)];
      const auto dy = datt.middleCols(h * dh, dh);
      const Mat dP = dy * v.transpose();
      dqkv.middleCols(2 * d + h * dh, dh).noalias() += P.transpose() * dy;
      Mat ds(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double dot = P.row(i).dot(dP.row(i));
        ds.row(i) = P.row(i).cwiseProduct((dP.row(i).array() - dot).matrix());
      }
      ds *= scale;
      dqkv.middleCols(h * dh, dh).noalias() += ds * k;
      dqkv.middleCols(d + h * dh, dh).noalias() += ds.transpose() * q;
    }
    Mat a = L.xhat1.array().rowwise() * CRow(p + lo.ln1_g, d).array();
    a.rowwise() += CRow(p + lo.ln1_b, d);
    MMap(g + lo.w_qkv, d, 3 * d).noalias() += a.transpose() * dqkv;
    MRow(g + lo.b_qkv, 3 * d) += dqkv.colwise().sum();
    const Mat da = dqkv * CMap(p + lo.w_qkv, d, 3 * d).transpose();
    dx += layernorm_backward(da, L.xhat1, L.rstd1, p + lo.ln1_g, g + lo.ln1_g, g + lo.ln1_b);
  }

  MMap dwte(g + o.wte, cfg.vocab_size, d), dwpe(g + o.wpe, cfg.max_len, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    dwte.row(tr.tokens[static_cast<std::size_t>(i)]) += dx.row(i);
    dwpe.row(i) += dx.row(i);
  }
}

// The layout is a pure function of the model config.
const Offsets& cached_offsets(const PolicyParams& params) {
  thread_local std::optional<ModelConfig> last;
  thread_local Offsets cached;
  if (!last || !(*last == params.config)) {
    cached = offsets_of(*params.layout, params.config);
    last = params.config;
  }
  return cached;
}

}  // namespace

void ModelConfig::validate() const {
  auto pos = [](int v, const char* name) {
    if (v <= 0) throw std::invalid_argument(std::string("model.") + name + " must be positive");
  };
  pos(vocab_size, "vocab_size");
  pos(d_model, "d_model");
  pos(n_layers, "n_layers");
  pos(n_heads, "n_heads");
  pos(d_ff, "d_ff");
  pos(max_len, "max_len");
  if (d_model % n_heads != 0) throw std::invalid_argument("model.d_model must be divisible by model.n_heads");
  if (max_len < kPromptLength + kPlanLength)
    throw std::invalid_argument("model.max_len must cover prompt (6) plus plan (7) tokens");
  if (!(init_std > 0.0)) throw std::invalid_argument("model.init_std must be positive");
}

ParamLayout::ParamLayout(const ModelConfig& cfg) {
  cfg.validate();
  auto add = [&](std::string name, int rows, int cols) {
    by_name_.emplace(name, tensors_.size());
    tensors_.push_back({std::move(name), rows, cols, total_});
    total_ += static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  };
  const int d = cfg.d_model;
  const int n_bb = cfg.split_backbone ? 2 : 1;
  for (int b = 0; b < n_bb; ++b) {
    add(bb_name(b, "wte"), cfg.vocab_size, d);
    add(bb_name(b, "wpe"), cfg.max_len, d);
    for (int l = 0; l < cfg.n_layers; ++l) {
      add(layer_name(b, l, "ln1.g"), 1, d);
      add(layer_name(b, l, "ln1.b"), 1, d);
      add(layer_name(b, l, "attn.w_qkv"), d, 3 * d);
      add(layer_name(b, l, "attn.b_qkv"), 1, 3 * d);
      add(layer_name(b, l, "attn.w_o"), d, d);
      add(layer_name(b, l, "attn.b_o"), 1, d);
      add(layer_name(b, l, "ln2.g"), 1, d);
      add(layer_name(b, l, "ln2.b"), 1, d);
      add(layer_name(b, l, "mlp.w_fc"), d, cfg.d_ff);
      add(layer_name(b, l, "mlp.b_fc"), 1, cfg.d_ff);
      add(layer_name(b, l, "mlp.w_proj"), cfg.d_ff, d);
      add(layer_name(b, l, "mlp.b_proj"), 1, d);
    }
    add(bb_name(b, "lnf.g"), 1, d);
    add(bb_name(b, "lnf.b"), 1, d);
  }
  add("lm.w", d, cfg.vocab_size);
  add("lm.b", 1, cfg.vocab_size);
  add("value.w", d, 1);
  add("value.b", 1, 1);
}

const TensorSpec& ParamLayout::find(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw std::out_of_range("no parameter tensor named '" + name + "'");
  return tensors_[it->second];
}

Eigen::Map<const Mat> PolicyParams::tensor(const std::string& name) const {
  const auto& t = layout->find(name);
  return {data.data() + t.offset, t.rows, t.cols};
}

Eigen::Map<Mat> PolicyParams::tensor(const std::string& name) {
  const auto& t = layout->find(name);
  return {data.data() + t.offset, t.rows, t.cols};
}

PolicyParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  PolicyParams params;
  params.config = cfg;
  params.layout = std::make_shared<const ParamLayout>(cfg);
  params.data.assign(params.layout->total(), 0.0);
  Rng rng = make_stream(seed, {0x1417});
  for (const auto& t : params.layout->tensors()) {
    const auto ends_with = [&](const char* suffix) {
      const std::string s(suffix);
      return t.name.size() >= s.size() && t.name.compare(t.name.size() - s.size(), s.size(), s) == 0;
    };
    double* base = params.data.data() + t.offset;
    if (t.name.rfind("lm.", 0) == 0 || t.name.rfind("value.", 0) == 0) continue;
    if (ends_with(".g")) {
      std::fill(base, base + t.size(), 1.0);
    } else if (t.rows > 1) {
      for (std::size_t i = 0; i < t.size(); ++i) base[i] = cfg.init_std * normal(rng);
    }
  }
  return params;
}

PolicyParams clone_params(const PolicyParams& params) { return params; }

ForwardOutput forward(const PolicyParams& params, std::span<const Token> tokens, ForwardTrace* trace) {
  const ModelConfig& cfg = params.config;
  check_length(cfg, tokens.size());
  const Offsets& o = cached_offsets(params);
  const double* p = params.data.data();

  ForwardTrace local;
  ForwardTrace& tr = trace ? *trace : local;
  backbone_forward(cfg, o.backbones[0], p, tokens, tr.policy);
  const BackboneTrace* critic = &tr.policy;
  if (cfg.split_backbone) {
    tr.critic = std::make_unique<BackboneTrace>();
    backbone_forward(cfg, o.backbones[1], p, tokens, *tr.critic);
    critic = tr.critic.get();
  } else {
    tr.critic.reset();
  }

  ForwardOutput out;
  out.logits.noalias() = tr.policy.hidden * CMap(p + o.lm_w, cfg.d_model, cfg.vocab_size);
  out.logits.rowwise() += CRow(p + o.lm_b, cfg.vocab_size);
  out.values = critic->hidden * Eigen::Map<const Vec>(p + o.value_w, cfg.d_model);
  out.values.array() += p[o.value_b];
  return out;
}

void backward(const PolicyParams& params, const ForwardTrace& trace, const Mat& dlogits, const Vec& dvalues,
              std::span<double> grad) {
  const ModelConfig& cfg = params.config;
  if (grad.size() != params.data.size()) throw ShapeMismatch("gradient buffer does not match parameter layout");
  const Offsets& o = cached_offsets(params);
  const double* p = params.data.data();
  double* g = grad.data();
  const BackboneTrace& pol = trace.policy;
  const BackboneTrace& cri = cfg.split_backbone ? *trace.critic : trace.policy;
  const int d = cfg.d_model;

  MMap(g + o.lm_w, d, cfg.vocab_size).noalias() += pol.hidden.transpose() * dlogits;
  MRow(g + o.lm_b, cfg.vocab_size) += dlogits.colwise().sum();
  Eigen::Map<Vec>(g + o.value_w, d).noalias() += cri.hidden.transpose() * dvalues;
  g[o.value_b] += dvalues.sum();

  Mat dh_policy = dlogits * CMap(p + o.lm_w, d, cfg.vocab_size).transpose();
  Mat dh_value = dvalues * Eigen::Map<const RowVec>(p + o.value_w, d);
  if (cfg.split_backbone) {
    backbone_backward(cfg, o.backbones[0], p, g, pol, dh_policy);
    backbone_backward(cfg, o.backbones[1], p, g, cri, dh_value);
  } else {
    dh_policy += dh_value;
    backbone_backward(cfg, o.backbones[0], p, g, pol, dh_policy);
  }
}

Mat log_softmax(const Mat& logits) {
  Mat out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    const double lse = mx + std::log((logits.row(i).array() - mx).exp().sum());
    out.row(i) = logits.row(i).array() - lse;
  }
  return out;
}

Decoder::Decoder(const PolicyParams& params) : params_(&params) {
  const auto& cfg = params.config;
  keys_.assign(static_cast<std::size_t>(cfg.n_layers), Mat(cfg.max_len, cfg.d_model));
  values_.assign(static_cast<std::size_t>(cfg.n_layers), Mat(cfg.max_len, cfg.d_model));
}

RowVec Decoder::push(Token token) {
  const ModelConfig& cfg = params_->config;
  check_length(cfg, length_ + 1);
  if (token < 0 || token >= cfg.vocab_size) throw std::out_of_range("token id outside vocabulary");
  const Offsets& off = cached_offsets(*params_);
  const BackboneOffsets& o = off.backbones[0];
  const double* p = params_->data.data();
  const int d = cfg.d_model, dh = d / cfg.n_heads, f = cfg.d_ff;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto pos = static_cast<Eigen::Index>(length_);

  Mat x = CMap(p + o.wte, cfg.vocab_size, d).row(token) + CMap(p + o.wpe, cfg.max_len, d).row(pos);
  Mat xhat, y;
  Vec rstd;
  for (int l = 0; l < cfg.n_layers; ++l) {
    const LayerOffsets& lo = o.layers[static_cast<std::size_t>(l)];
    Mat& K = keys_[static_cast<std::size_t>(l)];
    Mat& V = values_[static_cast<std::size_t>(l)];
    layernorm(x, p + lo.ln1_g, p + lo.ln1_b, xhat, rstd, y);
    RowVec qkv = y * CMap(p + lo.w_qkv, d, 3 * d);
    qkv += CRow(p + lo.b_qkv, 3 * d);
    K.row(pos) = qkv.segment(d, d);
    V.row(pos) = qkv.segment(2 * d, d);
    RowVec att(d);
    for (int h = 0; h < cfg.n_heads; ++h) {
      const auto q = qkv.segment(h * dh, dh);
      RowVec s = (K.block(0, h * dh, pos + 1, dh) * q.transpose()).transpose() * scale;
      const double mx = s.maxCoeff();
      s = (s.array() - mx).exp();
      s /= s.sum();
      att.segment(h * dh, dh) = s * V.block(0, h * dh, pos + 1, dh);
    }
    x += att * CMap(p + lo.w_o, d, d);
    x += CRow(p + lo.b_o, d);
    layernorm(x, p + lo.ln2_g, p + lo.ln2_b, xhat, rstd, y);
    RowVec pre = y * CMap(p + lo.w_fc, d, f);
    pre += CRow(p + lo.b_fc, f);
    x += pre.unaryExpr([](double z) { return gelu(z); }) * CMap(p + lo.w_proj, f, d);
    x += CRow(p + lo.b_proj, d);
  }
  layernorm(x, p + o.lnf_g, p + o.lnf_b, xhat, rstd, y);
  RowVec logits = y * CMap(p + off.lm_w, d, cfg.vocab_size);
  logits += CRow(p + off.lm_b, cfg.vocab_size);
  ++length_;
  return logits;
}

Completion sample_from(Decoder decoder, RowVec next_logits, const SamplingOptions& opts, Rng& rng) {
  if (!opts.greedy && !(opts.temperature > 0.0)) throw std::invalid_argument("sampling temperature must be positive");
  Completion out;
  for (int step = 0; step < opts.max_tokens; ++step) {
    const double mx = next_logits.maxCoeff();
    const double lse = mx + std::log((next_logits.array() - mx).exp().sum());
    Eigen::Index choice = 0;
    if (opts.greedy) {
      next_logits.maxCoeff(&choice);
    } else {
      const RowVec scaled = next_logits / opts.temperature;
      const double smx = scaled.maxCoeff();
      const RowVec w = (scaled.array() - smx).exp();
      const double u = uniform(rng, 0.0, w.sum());
      double acc = 0.0;
      choice = w.size() - 1;
      for (Eigen::Index j = 0; j < w.size(); ++j) {
        acc += w(j);
        if (u < acc) {
          choice = j;
          break;
        }
      }
    }
    const auto tok = static_cast<Token>(choice);
    out.tokens.push_back(tok);
    out.logprobs.push_back(next_logits(choice) - lse);
    if (tok == kEos || step + 1 == opts.max_tokens) break;
    next_logits = decoder.push(tok);
  }
  return out;
}

Completion sample_completion(const PolicyParams& params, std::span<const Token> prompt, const SamplingOptions& opts,
                             Rng& rng) {
  if (prompt.empty()) throw std::invalid_argument("empty prompt");
  Decoder dec(params);
  RowVec logits;
  for (Token t : prompt) logits = dec.push(t);
  return sample_from(std::move(dec), std::move(logits), opts, rng);
}

void apply_update(PolicyParams& params, std::span<const double> grad, AdamState& state, const AdamConfig& cfg) {
  const std::size_t n = params.data.size();
  if (grad.size() != n) throw ShapeMismatch("gradient size " + std::to_string(grad.size()) +
                                            " does not match parameter count " + std::to_string(n));
  if (state.m.empty()) {
    state.m.assign(n, 0.0);
    state.v.assign(n, 0.0);
  }
  if (state.m.size() != n) throw ShapeMismatch("optimizer state does not match parameter count");
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < n; ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params.data[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
  ++params.version;
}

}  // namespace rldtf
