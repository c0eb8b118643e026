#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "rldtf/dsl.hpp"
#include "rldtf/rng.hpp"

namespace rldtf {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;

struct ModelConfig {
  int vocab_size = 87;
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 4;
  int d_ff = 256;
  int max_len = 16;
  // Separate backbone for the critic instead of a value head on the
  // policy backbone.
  bool split_backbone = false;
  double init_std = 0.02;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct TensorSpec {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;

  std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
};

// Flat parameter buffer layout. Every trainable tensor is a row-major
// [rows x cols] slice of one contiguous vector.
class ParamLayout {
 public:
  explicit ParamLayout(const ModelConfig& cfg);

  const std::vector<TensorSpec>& tensors() const { return tensors_; }
  const TensorSpec& find(const std::string& name) const;
  std::size_t total() const { return total_; }

 private:
  std::vector<TensorSpec> tensors_;
  std::unordered_map<std::string, std::size_t> by_name_;
  std::size_t total_ = 0;
};

struct PolicyParams {
  ModelConfig config;
  std::shared_ptr<const ParamLayout> layout;
  std::vector<double> data;
  std::uint64_t version = 0;

  Eigen::Map<const Mat> tensor(const std::string& name) const;
  Eigen::Map<Mat> tensor(const std::string& name);
  std::size_t size() const { return data.size(); }
};

// Weights ~ N(0, init_std); LayerNorm gains 1; biases, LM head and value
// head zero.
PolicyParams init_params(const ModelConfig& cfg, std::uint64_t seed);

// Deep copy; the version counter is carried over and then frozen.
PolicyParams clone_params(const PolicyParams& params);

class SequenceTooLong : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Saved activations of one backbone pass.
struct BackboneTrace {
  struct Layer {
    Mat x_in, xhat1, qkv, att_cat, x_mid, xhat2, fc_pre, fc_act;
    Vec rstd1, rstd2;
    std::vector<Mat> probs;  // per head [n x n]
  };
  std::vector<Token> tokens;
  std::vector<Layer> layers;
  Mat x_final, xhat_f, hidden;
  Vec rstd_f;
};

struct ForwardTrace {
  BackboneTrace policy;
  std::unique_ptr<BackboneTrace> critic;  // split-backbone mode only
};

struct ForwardOutput {
  Mat logits;  // [n x vocab]
  Vec values;  // [n]
};

// Causal forward over the whole sequence. Position t sees tokens <= t.
ForwardOutput forward(const PolicyParams& params, std::span<const Token> tokens, ForwardTrace* trace = nullptr);

// Accumulates dL/dparams into grad (same layout as params.data) given
// dL/dlogits and dL/dvalues for a traced forward pass.
void backward(const PolicyParams& params, const ForwardTrace& trace, const Mat& dlogits, const Vec& dvalues,
              std::span<double> grad);

// Row-wise log-softmax.
Mat log_softmax(const Mat& logits);

// Incremental decoder over the policy backbone with cached keys/values.
// Copying a decoder forks the cached context.
class Decoder {
 public:
  explicit Decoder(const PolicyParams& params);

  // Appends a token and returns the next-token logits at its position.
  RowVec push(Token token);
  std::size_t length() const { return length_; }

 private:
  const PolicyParams* params_;
  std::vector<Mat> keys_, values_;  // per layer [max_len x d_model]
  std::size_t length_ = 0;
};

struct SamplingOptions {
  double temperature = 1.0;
  bool greedy = false;
  int max_tokens = kPlanLength;
};

struct Completion {
  TokenSeq tokens;
  // log pi(a_t | s_t) under the untempered policy
  std::vector<double> logprobs;
};

// Autoregressive sampling until EOS or max_tokens.
Completion sample_completion(const PolicyParams& params, std::span<const Token> prompt,
                             const SamplingOptions& opts, Rng& rng);

// Continues from a decoder whose context already holds the prompt; the
// last prompt logits must be supplied.
Completion sample_from(Decoder decoder, RowVec next_logits, const SamplingOptions& opts, Rng& rng);

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m, v;
  std::uint64_t step = 0;
};

class ShapeMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

void apply_update(PolicyParams& params, std::span<const double> grad, AdamState& state, const AdamConfig& cfg);

}  // namespace rldtf
