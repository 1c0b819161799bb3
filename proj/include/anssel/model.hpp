#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "anssel/textenc.hpp"

namespace anssel {

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t hidden_size = 64;
  std::size_t num_layers = 2;
  std::size_t num_heads = 4;
  std::size_t ffn_size = 256;
  std::size_t max_len = kDefaultMaxLen;
  double dropout_rate = 0.1;
  std::uint64_t seed = 0;

  std::size_t head_dim() const { return hidden_size / num_heads; }
  // Throws ConfigError on any invariant violation.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

enum class TensorClass { kEmbedding, kAttention, kFeedForward, kLayerNorm, kHead };

std::string_view to_string(TensorClass cls);

struct TensorInfo {
  std::string name;
  TensorClass tensor_class;
  std::size_t rows;
  std::size_t cols;
  std::size_t offset;

  std::size_t size() const { return rows * cols; }
  // Biases and layer-norm gains/biases are vectors (rows == 1).
  bool is_weight() const;
};

// Flat ordering of every learnable tensor. Matrices are row-major and act on
// row vectors (y = x W + b), so projection weights are in_features x
// out_features. The order is:
//
//   token_embedding [V x H], position_embedding [max_len x H],
//   segment_embedding [2 x H],
//   per layer l: attn_query_{weight,bias}, attn_key_{weight,bias},
//     attn_value_{weight,bias}, attn_output_{weight,bias} ([H x H], [H]),
//     attn_norm_{gain,bias} [H], ffn_in_{weight,bias} ([H x F], [F]),
//     ffn_out_{weight,bias} ([F x H], [H]), ffn_norm_{gain,bias} [H],
//   head_weight [H], head_bias [1].
class ParamLayout {
 public:
  struct Layer {
    std::size_t query_w, query_b, key_w, key_b, value_w, value_b, output_w, output_b;
    std::size_t attn_norm_g, attn_norm_b;
    std::size_t ffn_in_w, ffn_in_b, ffn_out_w, ffn_out_b;
    std::size_t ffn_norm_g, ffn_norm_b;
  };

  ParamLayout() = default;
  explicit ParamLayout(const ModelConfig& config);

  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  std::size_t total_size() const { return total_; }
  // Index into tensors() of the tensor containing flat index `flat`.
  std::size_t tensor_index(std::size_t flat) const;

  std::size_t token_embedding = 0;
  std::size_t position_embedding = 0;
  std::size_t segment_embedding = 0;
  std::vector<Layer> layers;
  std::size_t head_w = 0;
  std::size_t head_b = 0;

 private:
  std::size_t push(std::string name, TensorClass cls, std::size_t rows, std::size_t cols);

  std::vector<TensorInfo> tensors_;
  std::size_t total_ = 0;
};

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using RowVector = Eigen::Matrix<T, 1, Eigen::Dynamic>;

// A flat parameter-shaped vector. Tag separates parameters from gradients.
template <typename T, typename Tag>
class ParameterBlock {
 public:
  using Scalar = T;
  using MatrixMap = Eigen::Map<Matrix<T>>;
  using ConstMatrixMap = Eigen::Map<const Matrix<T>>;
  using VectorMap = Eigen::Map<RowVector<T>>;
  using ConstVectorMap = Eigen::Map<const RowVector<T>>;

  ParameterBlock() = default;
  explicit ParameterBlock(const ModelConfig& config)
      : config_(config), layout_(config), values_(layout_.total_size(), T(0)) {}

  const ModelConfig& config() const { return config_; }
  const ParamLayout& layout() const { return layout_; }
  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  MatrixMap matrix(std::size_t offset, std::size_t rows, std::size_t cols) {
    return MatrixMap(values_.data() + offset, static_cast<Eigen::Index>(rows),
                     static_cast<Eigen::Index>(cols));
  }
  ConstMatrixMap matrix(std::size_t offset, std::size_t rows, std::size_t cols) const {
    return ConstMatrixMap(values_.data() + offset, static_cast<Eigen::Index>(rows),
                          static_cast<Eigen::Index>(cols));
  }
  VectorMap vector(std::size_t offset, std::size_t n) {
    return VectorMap(values_.data() + offset, static_cast<Eigen::Index>(n));
  }
  ConstVectorMap vector(std::size_t offset, std::size_t n) const {
    return ConstVectorMap(values_.data() + offset, static_cast<Eigen::Index>(n));
  }

  bool all_finite() const;

  bool operator==(const ParameterBlock& other) const {
    return config_ == other.config_ && values_ == other.values_;
  }

 private:
  ModelConfig config_;
  ParamLayout layout_;
  std::vector<T> values_;
};

struct ParamsTag {};
struct GradsTag {};

template <typename T>
using ModelParams = ParameterBlock<T, ParamsTag>;
template <typename T>
using Gradients = ParameterBlock<T, GradsTag>;

// Truncated normal (std 0.02, cut at 2 sigma) for embeddings and all weight
// matrices including the scoring weight; layer-norm gains 1; biases 0.
// Draws happen in flat order from Rng(config.seed).
template <typename T>
ModelParams<T> init_params(const ModelConfig& config);

template <typename T>
ModelParams<T> convert_params(const ModelParams<double>& params);
template <typename T>
ModelParams<T> convert_params(const ModelParams<float>& params);

// Activations kept by forward() for backward(). Only the leading non-PAD
// positions of each sequence are materialized: PAD keys receive zero
// attention weight, so they cannot influence the [CLS] state.
template <typename T>
struct LayerCache {
  Matrix<T> input;
  Matrix<T> query, key, value;
  std::vector<Matrix<T>> probs;       // per head, softmax output before dropout
  std::vector<Matrix<T>> probs_drop;  // per head, scaled keep-mask (empty in eval)
  Matrix<T> context;
  Matrix<T> attn_norm_xhat;
  RowVector<T> attn_norm_rstd;
  Matrix<T> attn_out;  // post layer-norm
  Matrix<T> ffn_pre;
  Matrix<T> ffn_act;   // after GELU and dropout
  Matrix<T> ffn_drop;  // scaled keep-mask (empty in eval)
  Matrix<T> ffn_norm_xhat;
  RowVector<T> ffn_norm_rstd;
};

template <typename T>
struct SequenceCache {
  std::vector<TokenId> tokens;
  std::vector<std::uint8_t> segments;
  std::vector<LayerCache<T>> layers;
  RowVector<T> cls;
  T score{};
};

template <typename T>
struct ForwardCache {
  std::uint64_t params_fingerprint = 0;
  std::size_t params_size = 0;
  bool train_mode = false;
  std::vector<SequenceCache<T>> sequences;
};

template <typename T>
struct ForwardResult {
  std::vector<T> scores;
  ForwardCache<T> cache;
};

// Scores every pair: embeddings, num_layers post-LN transformer blocks,
// sigmoid(w . h_cls + b). With train_mode, dropout (after the attention
// softmax and after the FFN activation) draws from Rng(dropout_seed) in
// batch, layer, head order. Throws DataError on a malformed pair or a
// length that differs from config.max_len.
template <typename T>
ForwardResult<T> forward(const ModelParams<T>& params, std::span<const EncodedPair> batch,
                         bool train_mode = false, std::uint64_t dropout_seed = 0);

// Gradient of sum_i score_grads[i] * score_i with respect to every
// parameter. Throws Error when the cache was produced from different
// parameter values or the batch size does not match.
template <typename T>
Gradients<T> backward(const ModelParams<T>& params, const ForwardCache<T>& cache,
                      std::span<const T> score_grads);

// Eval-mode scores for a batch, no cache retained.
template <typename T>
std::vector<T> score_batch(const ModelParams<T>& params, std::span<const EncodedPair> batch);

template <typename T>
T score_pair(const ModelParams<T>& params, const Vocab& vocab, std::string_view question,
             std::string_view answer, TruncationPolicy policy = TruncationPolicy::kAnswerFirst);

// Order-sensitive 64-bit hash of the parameter bits.
template <typename T>
std::uint64_t fingerprint(std::span<const T> values);

// 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))
double gelu(double x);
double gelu_grad(double x);

}  // namespace anssel
